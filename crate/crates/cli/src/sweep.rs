//! The three λ-sweeps and their tables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use stein_lab::point_process::{analyse_pp, pp_operator, remark_4_2_counts, verify_identity_4_5, CountRow, PPRateRow};
use stein_lab::poisson_multi::{analyse_multi, multi_operator, verify_identity_3_5, MultiReport};
use stein_lab::poisson_uni::{delta_g_bound, verify_identity_2_7, UniIdentity, BOUND_SLACK};
use stein_lab::state_space::{default_n_total_max, DEFAULT_N_AB_MAX};
use stein_lab::{
    fit_rate, relative_spread, BoxSpace, Carrier, ConfigSpace, MultiProblem, PPProblem, StateSpace, UniProblem,
    UniSpace,
};

use crate::config::{ConfigError, Section, SweepConfig};
use crate::plot::{loglog_svg, Series};

pub const IDENTITY_TOLERANCE: f64 = 1e-8;
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
pub const COUNT_TOLERANCE: f64 = 1e-6;
const RANDOM_FUNCTIONS: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("computation failed: {0}")]
    Numerical(#[from] stein_lab::Error),
}

fn invalid(e: stein_lab::Error) -> SweepError {
    SweepError::Config(ConfigError(e.to_string()))
}

/// A rendered file, named relative to the output directory.
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

pub struct SweepOutput {
    pub csv: Artifact,
    pub plots: Vec<Artifact>,
    /// One message per failed assertion.
    pub failures: Vec<String>,
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput, SweepError> {
    match cfg.section {
        Section::Uni => uni(cfg),
        Section::Multi => multi(cfg),
        Section::Pp => pp(cfg),
    }
}

fn num(x: f64) -> String {
    format!("{x:.11e}")
}

struct Table {
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
    footer: Vec<String>,
}

impl Table {
    fn render(&self, failures: &[String]) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.header.len());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        for line in &self.footer {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        if failures.is_empty() {
            out.push_str("# status: all assertions passed\n");
        } else {
            for f in failures {
                out.push_str("# FAILED: ");
                out.push_str(f);
                out.push('\n');
            }
        }
        out
    }
}

fn fit_line(name: &str, points: &[(f64, f64)]) -> String {
    match fit_rate(points) {
        Ok(f) => format!(
            "fit {name}: c={} p={} q={} residual={} alternative_residual={}",
            num(f.c),
            num(f.p),
            f.q,
            num(f.residual),
            num(f.alternative_residual)
        ),
        Err(e) => format!("fit {name}: skipped ({e})"),
    }
}

fn spread_line(name: &str, values: &[f64]) -> String {
    format!("spread {name}: {}", num(relative_spread(values)))
}

fn rate_plot(name: String, title: &str, y_label: &str, points: Vec<(f64, f64)>) -> Artifact {
    let mut series = vec![Series {
        label: "computed".into(),
        points: points.clone(),
        dashed: false,
    }];
    if let Ok(f) = fit_rate(&points) {
        series.push(Series {
            label: format!("fit p={:.3} q={}", f.p, f.q),
            points: points.iter().map(|&(l, _)| (l, f.predict(l))).collect(),
            dashed: true,
        });
    }
    Artifact {
        name,
        contents: loglog_svg(title, "lambda", y_label, &series),
    }
}

fn random_g(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn rng_for(cfg: &SweepConfig, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(index as u64))
}

fn uni(cfg: &SweepConfig) -> Result<SweepOutput, SweepError> {
    let problems = cfg
        .lambda_grid
        .iter()
        .map(|&l| {
            let k = cfg.k.unwrap_or_else(|| UniProblem::default_k(l));
            match &cfg.n_max {
                Some(n) => UniProblem::with_space(l, k, UniSpace::with_max_states(n[0], cfg.max_states)?),
                None => UniProblem::new(l, k),
            }
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(invalid)?;
    let rows: Vec<UniIdentity> = problems.par_iter().map(verify_identity_2_7).collect::<Result<_, _>>()?;

    let mut failures = Vec::new();
    for r in &rows {
        if !(r.rel_err <= IDENTITY_TOLERANCE) {
            failures.push(format!("lambda={} k={}: identity rel_err {} > {IDENTITY_TOLERANCE:e}", r.lambda, r.k, num(r.rel_err)));
        }
        let bound = delta_g_bound(r.lambda);
        if r.sup_dg > bound * (1.0 + BOUND_SLACK) {
            failures.push(format!("lambda={} k={}: sup_dg {} above bound {}", r.lambda, r.k, num(r.sup_dg), num(bound)));
        }
    }
    let sup: Vec<(f64, f64)> = rows.iter().map(|r| (r.lambda, r.sup_dg)).collect();
    let dtv: Vec<(f64, f64)> = rows.iter().map(|r| (r.lambda, r.lhs)).collect();
    let table = Table {
        header: &["lambda", "k", "p_k", "d_tv", "sup_dg", "rel_err_2_7", "leak"],
        rows: rows
            .iter()
            .map(|r| {
                vec![num(r.lambda), r.k.to_string(), num(r.p_k), num(r.lhs), num(r.sup_dg), num(r.rel_err), num(r.leak)]
            })
            .collect(),
        footer: vec![
            fit_line("sup_dg", &sup),
            fit_line("d_tv", &dtv),
            spread_line("lambda*sup_dg", &rows.iter().map(|r| r.lambda * r.sup_dg).collect::<Vec<_>>()),
            spread_line("d_tv*lambda^1.5", &rows.iter().map(|r| r.lhs * r.lambda.powf(1.5)).collect::<Vec<_>>()),
        ],
    };
    let plots = if cfg.plots {
        vec![
            rate_plot("uni_sup_dg.svg".into(), "sup |Δg_h(k)|", "sup_dg", sup),
            rate_plot("uni_d_tv.svg".into(), "d_TV(L(W_k), Po(λ))", "d_tv", dtv),
        ]
    } else {
        Vec::new()
    };
    Ok(finish("uni", table, plots, failures))
}

fn finish(section: &str, table: Table, plots: Vec<Artifact>, failures: Vec<String>) -> SweepOutput {
    SweepOutput {
        csv: Artifact {
            name: format!("{section}_sweep.csv"),
            contents: table.render(&failures),
        },
        plots,
        failures,
    }
}

struct MultiRow {
    report: MultiReport,
    random_identity: f64,
    corner: Vec<u32>,
}

fn multi(cfg: &SweepConfig) -> Result<SweepOutput, SweepError> {
    let problems = cfg
        .lambda_grid
        .iter()
        .map(|&l| match &cfg.n_max {
            Some(n) => MultiProblem::with_space(l, cfg.mu.clone(), BoxSpace::with_max_states(n.clone(), cfg.max_states)?),
            None => MultiProblem::with_max_states(l, cfg.mu.clone(), cfg.max_states),
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(invalid)?;
    let rows: Vec<MultiRow> = problems
        .par_iter()
        .enumerate()
        .map(|(i, problem)| {
            let report = analyse_multi(problem)?;
            let operator = multi_operator(problem)?;
            let mut rng = rng_for(cfg, i);
            let mut worst = 0.0f64;
            for _ in 0..RANDOM_FUNCTIONS {
                let g = random_g(problem.space().len(), &mut rng);
                worst = worst.max(verify_identity_3_5(problem, &operator, &report.response, &g)?.rel_err);
            }
            Ok(MultiRow {
                report,
                random_identity: worst,
                corner: problem.corner().to_vec(),
            })
        })
        .collect::<Result<_, stein_lab::Error>>()?;

    let mut failures = Vec::new();
    for row in &rows {
        let r = &row.report;
        let mut check = |ok: bool, what: String| {
            if !ok {
                failures.push(format!("lambda={}: {what}", r.lambda));
            }
        };
        check(r.rel_err <= IDENTITY_TOLERANCE, format!("d_tv identity rel_err {}", num(r.rel_err)));
        check(row.random_identity <= IDENTITY_TOLERANCE, format!("random-g identity rel_err {}", num(row.random_identity)));
        check(r.swap_asymmetry <= SYMMETRY_TOLERANCE, format!("swap asymmetry {}", num(r.swap_asymmetry)));
        check(r.mean_error <= IDENTITY_TOLERANCE, format!("mean error {}", num(r.mean_error)));
        check(r.sup <= r.sandwich_upper, format!("sup {} above upper bound {}", num(r.sup), num(r.sandwich_upper)));
        check(
            !r.lower_bound.applicable || r.sup >= r.sandwich_lower,
            format!("sup {} below lower bound {}", num(r.sup), num(r.sandwich_lower)),
        );
    }
    let normalised: Vec<(f64, f64)> = rows.iter().map(|r| (r.report.lambda, r.report.d_tv / r.report.p)).collect();
    let table = Table {
        header: &[
            "lambda",
            "k1",
            "k2",
            "p",
            "d_tv",
            "sup_d12",
            "rel_err_3_5",
            "rel_err_random_g",
            "lower_3_3",
            "upper_3_1",
            "lower_applicable",
            "swap_asymmetry",
            "mean_error",
            "scaled_3_6",
            "leak",
        ],
        rows: rows
            .iter()
            .map(|row| {
                let r = &row.report;
                vec![
                    num(r.lambda),
                    row.corner[0].to_string(),
                    row.corner[1].to_string(),
                    num(r.p),
                    num(r.d_tv),
                    num(r.sup),
                    num(r.rel_err),
                    num(row.random_identity),
                    num(r.sandwich_lower),
                    num(r.sandwich_upper),
                    r.lower_bound.applicable.to_string(),
                    num(r.swap_asymmetry),
                    num(r.mean_error),
                    num(r.scaled),
                    num(r.leak),
                ]
            })
            .collect(),
        footer: vec![
            format!("mu={:?} seed={}", cfg.mu, cfg.seed),
            fit_line("d_tv/p", &normalised),
            spread_line("d_tv*lambda/(p*log lambda)", &rows.iter().map(|r| r.report.scaled).collect::<Vec<_>>()),
        ],
    };
    let plots = if cfg.plots {
        vec![rate_plot("multi_d_tv.svg".into(), "d_TV(L(W), Po(λμ)) / P[W = K+ε1]", "d_tv/p", normalised)]
    } else {
        Vec::new()
    };
    Ok(finish("multi", table, plots, failures))
}

struct PPRow {
    rate: PPRateRow,
    counts: CountRow,
    random_identity: f64,
}

fn pp_problem(cfg: &SweepConfig, lambda: f64) -> stein_lab::Result<PPProblem> {
    let problem = if cfg.s_size == 1 && cfg.n_ab_max.is_none() && cfg.n_total_max.is_none() {
        PPProblem::with_max_states(lambda, cfg.max_states)?
    } else {
        let space = ConfigSpace::with_max_states(
            Carrier::new(cfg.s_size, lambda)?,
            cfg.n_total_max.unwrap_or_else(|| default_n_total_max(lambda)),
            cfg.n_ab_max.unwrap_or(DEFAULT_N_AB_MAX),
            cfg.max_states,
        )?;
        PPProblem::with_space(space)
    };
    problem.delta_ab()?;
    Ok(problem)
}

fn pp(cfg: &SweepConfig) -> Result<SweepOutput, SweepError> {
    let problems = cfg
        .lambda_grid
        .iter()
        .map(|&l| pp_problem(cfg, l))
        .collect::<Result<Vec<_>, _>>()
        .map_err(invalid)?;
    let rows: Vec<PPRow> = problems
        .par_iter()
        .enumerate()
        .map(|(i, problem)| {
            let rate = analyse_pp(problem)?;
            let operator = pp_operator(problem)?;
            let mut rng = rng_for(cfg, i);
            let mut worst = 0.0f64;
            for _ in 0..RANDOM_FUNCTIONS {
                let g = random_g(problem.space().len(), &mut rng);
                worst = worst.max(verify_identity_4_5(problem, &operator, &rate.response, &g)?.rel_err);
            }
            let counts = remark_4_2_counts(std::slice::from_ref(problem))?[0];
            Ok(PPRow {
                rate,
                counts,
                random_identity: worst,
            })
        })
        .collect::<Result<_, stein_lab::Error>>()?;

    let mut failures = Vec::new();
    for row in &rows {
        let r = &row.rate;
        let mut check = |ok: bool, what: String| {
            if !ok {
                failures.push(format!("lambda={}: {what}", r.lambda));
            }
        };
        let bound = r.upper / r.p;
        check(r.asymmetry <= SYMMETRY_TOLERANCE, format!("asymmetry {}", num(r.asymmetry)));
        check(row.random_identity <= IDENTITY_TOLERANCE, format!("random-g identity rel_err {}", num(row.random_identity)));
        check(r.per_function.iter().all(|&v| v <= bound), format!("|Δ_ab g_h(0)| above bound {}", num(bound)));
        check(row.counts.rel_err <= COUNT_TOLERANCE, format!("count identity rel_err {}", num(row.counts.rel_err)));
        check(r.bracketed() != Some(false), "exact d2 outside [lower, upper]".into());
    }
    let d2: Vec<(f64, f64)> = rows.iter().map(|r| (r.rate.lambda, r.rate.v_star)).collect();
    let counts: Vec<(f64, f64)> = rows.iter().map(|r| (r.rate.lambda, r.counts.count_tv / r.counts.p)).collect();
    let table = Table {
        header: &[
            "lambda",
            "p",
            "asymmetry",
            "v_00",
            "v_01",
            "v_10",
            "v_11",
            "v_star",
            "bound_4_1",
            "d2_lower",
            "d2_upper",
            "d2_exact",
            "count_tv",
            "count_identity",
            "rel_err_count",
            "rel_err_4_5",
            "leak",
        ],
        rows: rows
            .iter()
            .map(|row| {
                let r = &row.rate;
                let mut cells = vec![num(r.lambda), num(r.p), num(r.asymmetry)];
                cells.extend(r.per_function.iter().map(|&v| num(v)));
                cells.extend([
                    num(r.v_star),
                    num(r.upper / r.p),
                    num(r.lower),
                    num(r.upper),
                    r.d2_exact.as_ref().map(|d| num(d.value)).unwrap_or_default(),
                    num(row.counts.count_tv),
                    num(row.counts.identity),
                    num(row.counts.rel_err),
                    num(row.random_identity),
                    num(r.leak),
                ]);
                cells
            })
            .collect(),
        footer: vec![
            format!("s_size={} seed={}", cfg.s_size, cfg.seed),
            fit_line("d2_proxy/p", &d2),
            fit_line("count_tv/p", &counts),
            spread_line("v_11*lambda/log lambda", &rows.iter().map(|r| r.rate.per_function[3] * r.rate.lambda / r.rate.lambda.ln()).collect::<Vec<_>>()),
            spread_line("count_tv*lambda/p", &rows.iter().map(|r| r.counts.scaled).collect::<Vec<_>>()),
        ],
    };
    let plots = if cfg.plots {
        vec![
            rate_plot("pp_d2.svg".into(), "d2 lower bound / P[Ψ = δ_a]", "v*", d2),
            rate_plot("pp_count_tv.svg".into(), "d_TV(L(|Ψ|), Po(|λ|)) / P[Ψ = δ_a]", "count_tv/p", counts),
        ]
    } else {
        Vec::new()
    };
    Ok(finish("pp", table, plots, failures))
}

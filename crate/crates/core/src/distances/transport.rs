//! Primal network simplex for the uncapacitated transportation problem.
//!
//! Supplies and demands are normalised to unit mass, costs are rounded to
//! integers at a resolution of `1e-12`, and the spanning tree is kept
//! strongly feasible, so termination is exact and degenerate cycling
//! cannot occur. An artificial root joins every node; arcs into demand
//! nodes from the root carry a prohibitive cost and are driven out.

use crate::error::{Error, Result};

/// Cost resolution of the integer arithmetic.
pub const COST_SCALE: f64 = 1e12;

/// Optimal transport between two nonnegative mass vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    /// Optimal cost at the original (unnormalised) mass.
    pub cost: f64,
    /// Dual objective at the optimal potentials, same scale as `cost`.
    pub dual: f64,
    /// `|cost - dual|`.
    pub gap: f64,
    pub pivots: usize,
    /// Positive flows `(supply index, demand index, mass)`.
    pub flows: Vec<(usize, usize, f64)>,
}

const NONE: usize = usize::MAX;

struct Simplex {
    ns: usize,
    nd: usize,
    cost: Vec<i64>,
    art: i64,
    parent: Vec<usize>,
    pred: Vec<usize>,
    up: Vec<bool>,
    flow: Vec<f64>,
    depth: Vec<usize>,
    pot: Vec<i64>,
    children: Vec<Vec<usize>>,
}

impl Simplex {
    fn root(&self) -> usize {
        self.ns + self.nd
    }

    fn real_arcs(&self) -> usize {
        self.ns * self.nd
    }

    /// `(source, target, cost)` of arc `id`.
    fn arc(&self, id: usize) -> (usize, usize, i64) {
        let real = self.real_arcs();
        if id < real {
            (id / self.nd, self.ns + id % self.nd, self.cost[id])
        } else {
            let x = id - real;
            if x < self.ns {
                (x, self.root(), 0)
            } else {
                (self.root(), x, self.art)
            }
        }
    }

    fn reduced(&self, id: usize) -> i64 {
        let (s, t, c) = self.arc(id);
        c + self.pot[s] - self.pot[t]
    }

    fn detach(&mut self, parent: usize, child: usize) {
        let list = &mut self.children[parent];
        let pos = list.iter().position(|&c| c == child).expect("tree child lists are consistent");
        list.swap_remove(pos);
    }

    fn pivot(&mut self, entering: usize) -> Result<()> {
        let (u, v, _) = self.arc(entering);
        let (mut a, mut b) = (u, v);
        while a != b {
            if self.depth[a] >= self.depth[b] {
                a = self.parent[a];
            } else {
                b = self.parent[b];
            }
        }
        let join = a;

        // Last blocking arc along the cycle join -> u -> v -> join.
        let mut delta = f64::INFINITY;
        let mut leave = NONE;
        let mut leave_on_u = false;
        let mut x = u;
        while x != join {
            if self.up[x] && self.flow[x] < delta {
                delta = self.flow[x];
                leave = x;
                leave_on_u = true;
            }
            x = self.parent[x];
        }
        let mut x = v;
        while x != join {
            if !self.up[x] && self.flow[x] <= delta {
                delta = self.flow[x];
                leave = x;
                leave_on_u = false;
            }
            x = self.parent[x];
        }
        if leave == NONE {
            return Err(Error::InvalidParameter("unbounded transport problem".into()));
        }

        if delta > 0.0 {
            let mut x = u;
            while x != join {
                self.flow[x] += if self.up[x] { -delta } else { delta };
                x = self.parent[x];
            }
            let mut x = v;
            while x != join {
                self.flow[x] += if self.up[x] { delta } else { -delta };
                x = self.parent[x];
            }
        }

        let (inner, outer, inner_up) = if leave_on_u { (u, v, true) } else { (v, u, false) };
        let mut path = vec![inner];
        while *path.last().unwrap() != leave {
            path.push(self.parent[*path.last().unwrap()]);
        }
        let old: Vec<(usize, bool, f64)> = path.iter().map(|&w| (self.pred[w], self.up[w], self.flow[w])).collect();
        self.detach(self.parent[leave], leave);
        for t in 0..path.len() - 1 {
            self.detach(path[t + 1], path[t]);
        }
        self.parent[inner] = outer;
        self.pred[inner] = entering;
        self.up[inner] = inner_up;
        self.flow[inner] = delta;
        self.children[outer].push(inner);
        for t in 1..path.len() {
            let (w, prev) = (path[t], path[t - 1]);
            self.parent[w] = prev;
            self.pred[w] = old[t - 1].0;
            self.up[w] = !old[t - 1].1;
            self.flow[w] = old[t - 1].2;
            self.children[prev].push(w);
        }

        let mut stack = vec![inner];
        while let Some(x) = stack.pop() {
            let p = self.parent[x];
            let (_, _, c) = self.arc(self.pred[x]);
            self.pot[x] = if self.up[x] { self.pot[p] - c } else { self.pot[p] + c };
            self.depth[x] = self.depth[p] + 1;
            stack.extend_from_slice(&self.children[x]);
        }
        Ok(())
    }
}

/// Solves `min Σ c(i,j) x(i,j)` subject to row sums `supply` and column
/// sums `demand`, with `cost(i, j) >= 0`. Totals must agree to `1e-9`
/// relative.
pub fn transport<F>(supply: &[f64], demand: &[f64], cost: F) -> Result<TransportPlan>
where
    F: Fn(usize, usize) -> f64,
{
    for &m in supply.iter().chain(demand) {
        if !(m >= 0.0) || !m.is_finite() {
            return Err(Error::InvalidParameter(format!("transport mass {m} is not a finite nonnegative number")));
        }
    }
    let total_s: f64 = supply.iter().sum();
    let total_d: f64 = demand.iter().sum();
    if (total_s - total_d).abs() > 1e-9 * total_s.max(total_d) {
        return Err(Error::InvalidParameter(format!(
            "supply {total_s} and demand {total_d} do not balance"
        )));
    }
    let src: Vec<usize> = (0..supply.len()).filter(|&i| supply[i] > 0.0).collect();
    let dst: Vec<usize> = (0..demand.len()).filter(|&j| demand[j] > 0.0).collect();
    if src.is_empty() || dst.is_empty() {
        return Ok(TransportPlan {
            cost: 0.0,
            dual: 0.0,
            gap: 0.0,
            pivots: 0,
            flows: Vec::new(),
        });
    }
    let (ns, nd) = (src.len(), dst.len());
    let mut int_cost = Vec::with_capacity(ns * nd);
    let mut max_cost = 0i64;
    for &i in &src {
        for &j in &dst {
            let c = cost(i, j);
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::InvalidParameter(format!("transport cost ({i},{j}) = {c}")));
            }
            let ci = (c * COST_SCALE).round() as i64;
            max_cost = max_cost.max(ci);
            int_cost.push(ci);
        }
    }
    let n = ns + nd + 1;
    let root = ns + nd;
    let art = (max_cost + 1).saturating_mul(n as i64);
    let mut sx = Simplex {
        ns,
        nd,
        cost: int_cost,
        art,
        parent: vec![root; n],
        pred: (0..n).map(|x| ns * nd + x).collect(),
        up: (0..n).map(|x| x < ns).collect(),
        flow: vec![0.0; n],
        depth: vec![1; n],
        pot: (0..n).map(|x| if x >= ns && x < root { art } else { 0 }).collect(),
        children: vec![Vec::new(); n],
    };
    sx.parent[root] = NONE;
    sx.depth[root] = 0;
    sx.pot[root] = 0;
    for (k, &i) in src.iter().enumerate() {
        sx.flow[k] = supply[i] / total_s;
    }
    for (k, &j) in dst.iter().enumerate() {
        sx.flow[ns + k] = demand[j] / total_s;
    }
    sx.children[root] = (0..root).collect();

    let arcs = sx.real_arcs();
    let block = ((arcs as f64).sqrt().ceil() as usize).max(16).min(arcs);
    let max_pivots = 50 * arcs.max(n) + 10_000;
    let mut next = 0usize;
    let mut pivots = 0usize;
    loop {
        let mut best = NONE;
        let mut best_rc = 0i64;
        let mut scanned = 0usize;
        while scanned < arcs {
            let end = (scanned + block).min(arcs);
            for _ in scanned..end {
                let rc = sx.reduced(next);
                if rc < best_rc {
                    best_rc = rc;
                    best = next;
                }
                next += 1;
                if next == arcs {
                    next = 0;
                }
            }
            scanned = end;
            if best != NONE {
                break;
            }
        }
        if best == NONE {
            break;
        }
        sx.pivot(best)?;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::NoConvergence(pivots));
        }
    }

    let mut flows = Vec::new();
    let mut primal = 0.0;
    let mut stranded = 0.0;
    for x in 0..root {
        let id = sx.pred[x];
        if id < arcs {
            let (k, l) = (id / nd, id % nd);
            if sx.flow[x] > 0.0 {
                let (i, j) = (src[k], dst[l]);
                primal += sx.flow[x] * cost(i, j);
                flows.push((i, j, sx.flow[x] * total_s));
            }
        } else {
            stranded += sx.flow[x];
        }
    }
    if stranded > 1e-9 {
        return Err(Error::InvalidParameter(format!("transport left {stranded} mass unshipped")));
    }
    let mut dual = 0.0;
    for (k, &i) in src.iter().enumerate() {
        dual -= supply[i] / total_s * sx.pot[k] as f64 / COST_SCALE;
    }
    for (l, &j) in dst.iter().enumerate() {
        dual += demand[j] / total_s * sx.pot[ns + l] as f64 / COST_SCALE;
    }
    flows.sort_by_key(|f| (f.0, f.1));
    Ok(TransportPlan {
        cost: primal * total_s,
        dual: dual * total_s,
        gap: (primal - dual).abs() * total_s,
        pivots,
        flows,
    })
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};

use super::generator::Generator;
use super::prob::ProbVec;

/// Occupation-time estimate of the stationary law from one event-driven
/// trajectory started in state 0.
///
/// The first `steps / 10` jumps are discarded; the next `steps` jumps are
/// recorded, each state accumulating its exponential holding times.
pub fn simulate(gen: &Generator, steps: u64, seed: u64) -> Result<ProbVec> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be positive".into()));
    }
    gen.ensure_irreducible()?;
    let n = gen.len();
    if n == 1 {
        return ProbVec::new(gen.key().clone(), vec![1.0]);
    }
    let exit: Vec<f64> = (0..n).map(|i| gen.exit_rate(i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut occupation = vec![0.0; n];
    let mut state = 0usize;
    let burn_in = steps / 10;
    for step in 0..burn_in + steps {
        let rate = exit[state];
        if step >= burn_in {
            let hold: f64 = Exp1.sample(&mut rng);
            occupation[state] += hold / rate;
        }
        let mut u = rng.gen::<f64>() * rate;
        let mut next = None;
        for (j, r) in gen.row(state) {
            next = Some(j);
            if u < r {
                break;
            }
            u -= r;
        }
        state = next.expect("irreducible chains have no absorbing states");
    }
    ProbVec::from_weights(gen.key().clone(), occupation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state_space::SpaceKey;

    fn two_state() -> Generator {
        Generator::from_triplets(SpaceKey::new("two"), 2, &[(0, 1, 2.0), (1, 0, 1.0)]).unwrap()
    }

    #[test]
    fn two_state_occupation() {
        let est = simulate(&two_state(), 1_000_000, 7).unwrap();
        let tv = 0.5 * ((est.get(0) - 1.0 / 3.0).abs() + (est.get(1) - 2.0 / 3.0).abs());
        assert!(tv < 0.01, "tv = {tv}");
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let a = simulate(&two_state(), 10_000, 42).unwrap();
        let b = simulate(&two_state(), 10_000, 42).unwrap();
        assert_eq!(a.values(), b.values());
        let c = simulate(&two_state(), 10_000, 43).unwrap();
        assert_ne!(a.values(), c.values());
    }
}

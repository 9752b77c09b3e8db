//! Named distributions used throughout the examples and tests.

use super::{Alphabet, MarginalDistribution, StepDistribution};
use crate::number::{Scalar, Weights};
use crate::radix;
use crate::with_weights;

/// Uniform over `{00, 11, 22, 01, 12, 20}`: X uniform on Z₃ and Y equal to X or X+1.
pub fn cyclic_shift() -> StepDistribution {
    let tuples: Vec<Vec<usize>> = (0..3).flat_map(|x| [vec![x, x], vec![x, (x + 1) % 3]]).collect();
    StepDistribution::uniform_on(Alphabet::numeric(3), &tuples)
        .expect("valid")
        .with_name("cyclic shift")
}

/// Uniform over the six three-term progressions `(x, x+d, x+2d)` in Z₃ with d ∈ {0, 1}.
pub fn progressions() -> StepDistribution {
    let tuples: Vec<Vec<usize>> = (0..2)
        .flat_map(|d| (0..3).map(move |x| vec![x, (x + d) % 3, (x + 2 * d) % 3]))
        .collect();
    StepDistribution::uniform_on(Alphabet::numeric(3), &tuples)
        .expect("valid")
        .with_name("three-term progressions")
}

/// Uniform over `{00, 01, 11}`; the two marginals differ.
pub fn staircase() -> StepDistribution {
    StepDistribution::uniform_on(Alphabet::numeric(2), &[vec![0, 0], vec![0, 1], vec![1, 1]])
        .expect("valid")
        .with_name("staircase")
}

/// All steps equal, distributed as `pi`.
pub fn identity(pi: &MarginalDistribution, steps: usize) -> StepDistribution {
    let weights = with_weights!(pi.probs(), v => diagonal_table(v, steps));
    StepDistribution::new(pi.alphabet().clone(), steps, weights)
        .expect("valid")
        .with_name("identity coupling")
}

/// Independent steps, each distributed as `pi`.
pub fn independent(pi: &MarginalDistribution, steps: usize) -> StepDistribution {
    let weights = with_weights!(pi.probs(), v => product_table(v, steps));
    StepDistribution::new(pi.alphabet().clone(), steps, weights)
        .expect("valid")
        .with_name("independent")
}

fn diagonal_table<T: Scalar>(v: &[T], steps: usize) -> Weights {
    let m = v.len();
    let mut out = vec![T::zero(); m.pow(steps as u32)];
    for x in 0..m {
        out[radix::encode(&vec![x; steps], m)] = v[x].clone();
    }
    T::into_weights(out)
}

fn product_table<T: Scalar>(v: &[T], steps: usize) -> Weights {
    let m = v.len();
    let out = (0..m.pow(steps as u32))
        .map(|idx| {
            radix::decode(idx, m, steps)
                .into_iter()
                .fold(T::one(), |acc, a| acc * v[a].clone())
        })
        .collect();
    T::into_weights(out)
}

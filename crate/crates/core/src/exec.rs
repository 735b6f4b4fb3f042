//! Execution policy for the data-parallel inner loops.
//!
//! Every parallel loop in the crate is an indexed map whose results are
//! collected in index order, so the parallel and sequential paths produce
//! bit-identical outputs. Without the `parallel` feature both policies run
//! sequentially.

/// Selects how indexed maps are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_policies_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = Exec::Sequential.map(1000, f);
        let b = Exec::Parallel.map(1000, f);
        assert_eq!(a, b);
    }
}

//! Order-preserving map over independent jobs.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon thread pool; identical to `Sequential` when the `parallel`
    /// feature is off.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Apply `f` to every job; results come back in job order either way. The
/// first error (in job order) wins.
pub fn map<T, U, F>(exec: Execution, jobs: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync,
{
    match exec {
        Execution::Sequential => jobs.iter().map(f).collect(),
        Execution::Parallel => parallel(jobs, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel<T, U, F>(jobs: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync,
{
    use rayon::prelude::*;
    let out: Vec<Result<U>> = jobs.par_iter().map(&f).collect();
    out.into_iter().collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel<T, U, F>(jobs: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync,
{
    jobs.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn order_and_first_error() {
        let jobs: Vec<u64> = (0..50).collect();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let out = map(exec, &jobs, |&j| Ok(j * j)).unwrap();
            assert_eq!(out, jobs.iter().map(|j| j * j).collect::<Vec<_>>());
            let err = map(exec, &jobs, |&j| {
                if j % 7 == 3 {
                    Err(Error::invariant(format!("job {j}")))
                } else {
                    Ok(j)
                }
            })
            .unwrap_err();
            assert!(err.to_string().contains("job 3"));
        }
    }
}

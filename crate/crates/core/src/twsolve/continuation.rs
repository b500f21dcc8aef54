use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate, Grid, Params, Regime, TWSolution};

use super::newton::{solve_tw, NewtonOptions};

/// Steps shorter than this in parameter norm are not attempted; a failure at
/// that scale is taken to be the end of the branch.
pub const STEP_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    /// Whether the whole segment was traversed.
    pub completed: bool,
    pub start: Params,
    pub target: Params,
    /// Last parameters at which a travelling wave converged.
    pub last_good: Params,
    /// Fraction of the segment covered, in `[0, 1]`.
    pub reached: f64,
    pub steps_taken: usize,
    pub bisections: usize,
    /// Last step that failed at the floor, with the solver's message.
    pub failure: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub solutions: Vec<TWSolution>,
    pub report: ContinuationReport,
}

/// Natural-parameter continuation along the straight segment `start -> end`
/// in `n_steps` nominal steps, each converged solution seeding the next.
///
/// A step that fails is halved until it would drop below [`STEP_FLOOR`]; the
/// run then stops and reports the last converged parameters. Damping is taken
/// from `start` throughout.
pub fn continue_branch(
    start: &Params,
    end: &Params,
    n_steps: usize,
    regime: &Regime,
    grid: &Grid,
    opts: &NewtonOptions,
) -> Result<Branch> {
    if n_steps == 0 {
        return Err(Error::InvalidParams("continuation needs n_steps >= 1".into()));
    }
    validate(start, regime)?;
    start.with_lambda(end.lambda()).check()?;
    let first = solve_tw(start, regime, grid, opts, None)?;
    let length = start.lambda_distance(end);
    let (l0, l1) = (start.lambda(), end.lambda());
    let at = |s: f64| {
        let mut l = [0.0; 4];
        for k in 0..4 {
            l[k] = if s >= 1.0 { l1[k] } else { l0[k] + s * (l1[k] - l0[k]) };
        }
        start.with_lambda(l)
    };

    let mut solutions = vec![first];
    let mut report = ContinuationReport {
        completed: length == 0.0,
        start: *start,
        target: start.with_lambda(l1),
        last_good: *start,
        reached: if length == 0.0 { 1.0 } else { 0.0 },
        steps_taken: 0,
        bisections: 0,
        failure: None,
    };
    if length == 0.0 {
        return Ok(Branch { solutions, report });
    }

    let nominal = 1.0 / n_steps as f64;
    let mut ds = nominal;
    let mut s = 0.0;
    while s < 1.0 {
        let s_next = (s + ds).min(1.0);
        let params = at(s_next);
        let seed = solutions.last().expect("branch starts non-empty");
        match solve_tw(&params, regime, grid, opts, Some(seed)) {
            Ok(sol) => {
                solutions.push(sol);
                s = s_next;
                report.steps_taken += 1;
                report.last_good = params;
                report.reached = s;
                ds = (2.0 * ds).min(nominal);
            }
            Err(e) => {
                let half = 0.5 * (s_next - s);
                if half * length < STEP_FLOOR {
                    report.failure = Some(e.to_string());
                    return Ok(Branch { solutions, report });
                }
                ds = half;
                report.bisections += 1;
            }
        }
    }
    report.completed = true;
    Ok(Branch { solutions, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_length_path_is_single_solution() {
        let p = Params::new(0.0, 0.0, 0.0, 1.0, 0.1).unwrap();
        let b = continue_branch(&p, &p, 5, &Regime::Walker { k2: 1.0 }, &Grid::default(), &Default::default())
            .unwrap();
        assert_eq!(b.solutions.len(), 1);
        assert!(b.report.completed);
    }

    #[test]
    fn small_field_branch_is_monotone() {
        let start = Params::new(0.0, 0.0, 0.0, 1.0, 0.1).unwrap();
        let end = Params::new(0.001, 0.0, 0.0, 1.0, 0.1).unwrap();
        let b = continue_branch(
            &start,
            &end,
            4,
            &Regime::Walker { k2: 1.0 },
            &Grid::default(),
            &Default::default(),
        )
        .unwrap();
        assert!(b.report.completed);
        assert_eq!(b.solutions.len(), 5);
        assert_eq!(b.report.bisections, 0);
        for w in b.solutions.windows(2) {
            assert!(w[1].velocity < w[0].velocity);
        }
    }
}

//! Stackelberg equilibria through one LP per learner action.
//!
//! For each learner action `i` the optimizer maximizes `xᵀA_{:,i}` over the
//! region where `i` is a best response (or a margin-shifted estimate of it);
//! the equilibrium is the best of these. Boundary points belong to several
//! facets, so optimistic tie-breaking falls out of the outer max.

use crate::error::{Error, Result};
use crate::facets::{facet_constraints, margin_facet, MarginSign};
use crate::game::{best_response_optimistic, equiv_classes, simplex_grid, EquivClassRep};
use crate::game::{GameInstance, Matrix, ProbVector};
use crate::linprog::{solve_lp, Halfspace, LpProblem, LpSolution};

/// Largest simplex dimension accepted by [`brute_force_oracle`].
pub const ORACLE_MAX_DIM: usize = 3;
/// Largest grid resolution accepted by [`brute_force_oracle`].
pub const ORACLE_MAX_RESOLUTION: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolveMode {
    Exact,
    Optimistic { d: f64 },
    Pessimistic { d: f64 },
    ExtraPessimistic { epsilon: f64, slack: f64 },
}

/// Outcome of the LP for one learner action.
#[derive(Clone, Debug, PartialEq)]
pub struct FacetResult {
    pub action: usize,
    pub solution: LpSolution,
}

impl FacetResult {
    pub fn value(&self) -> Option<f64> {
        self.solution.value()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StackelbergSolution {
    pub x_star: ProbVector,
    /// Learner column index, 0-based.
    pub response: usize,
    pub value: f64,
    pub mode: SolveMode,
    pub per_facet: Vec<FacetResult>,
}

/// Result of a margin-adjusted solve.
#[derive(Clone, Debug, PartialEq)]
pub enum MarginOutcome {
    Solved(StackelbergSolution),
    /// No facet survived the margin.
    AllInfeasible { mode: SolveMode, per_facet: Vec<FacetResult> },
}

impl MarginOutcome {
    pub fn solution(&self) -> Option<&StackelbergSolution> {
        match self {
            MarginOutcome::Solved(s) => Some(s),
            MarginOutcome::AllInfeasible { .. } => None,
        }
    }

    pub fn into_solution(self) -> Option<StackelbergSolution> {
        match self {
            MarginOutcome::Solved(s) => Some(s),
            MarginOutcome::AllInfeasible { .. } => None,
        }
    }

    pub fn per_facet(&self) -> &[FacetResult] {
        match self {
            MarginOutcome::Solved(s) => &s.per_facet,
            MarginOutcome::AllInfeasible { per_facet, .. } => per_facet,
        }
    }
}

fn check_reps(a: &Matrix, reps: &[EquivClassRep]) -> Result<()> {
    if reps.len() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{} class representations for {} learner actions",
            reps.len(),
            a.cols()
        )));
    }
    for (i, rep) in reps.iter().enumerate() {
        if rep.pivot() != i {
            return Err(Error::PivotMismatch(i, rep.pivot()));
        }
        if rep.columns().rows() != a.rows() {
            return Err(Error::DimensionMismatch(format!(
                "representation {i} has {} rows, optimizer has {} actions",
                rep.columns().rows(),
                a.rows()
            )));
        }
    }
    Ok(())
}

/// Solves every facet LP and picks the best; ties go to the lowest action.
fn solve_facets(
    a: &Matrix,
    reps: &[EquivClassRep],
    system: impl Fn(&EquivClassRep) -> Result<Vec<Halfspace>>,
    mode: SolveMode,
) -> Result<MarginOutcome> {
    check_reps(a, reps)?;
    let per_facet = reps
        .iter()
        .enumerate()
        .map(|(i, rep)| {
            // degenerate class: i is a best response on the whole simplex
            let constraints = if rep.is_degenerate() {
                Vec::new()
            } else {
                system(rep)?
            };
            let solution = solve_lp(&LpProblem::new(a.col(i), constraints))?;
            Ok(FacetResult { action: i, solution })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = per_facet
        .iter()
        .filter_map(|f| match &f.solution {
            LpSolution::Optimal { x, value } => Some((f.action, x, *value)),
            LpSolution::Infeasible => None,
        })
        .fold(None, |acc: Option<(usize, &ProbVector, f64)>, cur| match acc {
            Some(prev) if prev.2 >= cur.2 => Some(prev),
            _ => Some(cur),
        });
    Ok(match best {
        Some((response, x, value)) => MarginOutcome::Solved(StackelbergSolution {
            x_star: x.clone(),
            response,
            value,
            mode,
            per_facet: per_facet.clone(),
        }),
        None => MarginOutcome::AllInfeasible { mode, per_facet },
    })
}

/// Exact Stackelberg equilibrium with optimistic tie-breaking.
pub fn solve_exact(game: &GameInstance) -> Result<StackelbergSolution> {
    let reps = equiv_classes(game.b());
    solve_facets(game.a(), &reps, facet_constraints, SolveMode::Exact)?
        .into_solution()
        .ok_or_else(|| Error::Numeric("every exact facet LP was infeasible".into()))
}

/// Stackelberg value over margin-shifted estimated facets.
pub fn solve_margin(
    a: &Matrix,
    reps_hat: &[EquivClassRep],
    d: f64,
    sign: MarginSign,
) -> Result<MarginOutcome> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::InvalidParameter(format!("margin {d} must be finite and >= 0")));
    }
    let mode = match sign {
        MarginSign::Optimistic => SolveMode::Optimistic { d },
        MarginSign::Pessimistic => SolveMode::Pessimistic { d },
    };
    solve_facets(a, reps_hat, |rep| margin_facet(rep, d, sign), mode)
}

/// Pessimistic solve with total margin `epsilon + slack`.
pub fn solve_extra_pessimistic(
    a: &Matrix,
    reps_hat: &[EquivClassRep],
    epsilon: f64,
    slack: f64,
) -> Result<MarginOutcome> {
    if !(epsilon >= 0.0 && slack >= 0.0 && epsilon.is_finite() && slack.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon} and slack {slack} must be finite and >= 0"
        )));
    }
    let total = epsilon + slack;
    let mode = SolveMode::ExtraPessimistic { epsilon, slack };
    solve_facets(
        a,
        reps_hat,
        |rep| margin_facet(rep, total, MarginSign::Pessimistic),
        mode,
    )
}

/// Best grid point found by [`brute_force_oracle`].
#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub x: ProbVector,
    pub response: usize,
    pub value: f64,
}

/// Grid search over `Δ_m` at spacing `1/resolution` with optimistic
/// tie-breaking.
pub fn brute_force_oracle(game: &GameInstance, resolution: usize) -> Result<OracleResult> {
    if game.m() > ORACLE_MAX_DIM {
        return Err(Error::InvalidParameter(format!(
            "grid oracle supports m <= {ORACLE_MAX_DIM}, got {}",
            game.m()
        )));
    }
    if resolution == 0 || resolution > ORACLE_MAX_RESOLUTION {
        return Err(Error::InvalidParameter(format!(
            "resolution must be in 1..={ORACLE_MAX_RESOLUTION}, got {resolution}"
        )));
    }
    let mut best: Option<OracleResult> = None;
    for point in simplex_grid(game.m(), resolution) {
        let x = ProbVector::from_vec_unchecked(point);
        let j = best_response_optimistic(game, &x);
        let value: f64 = x
            .as_slice()
            .iter()
            .enumerate()
            .map(|(r, v)| v * game.a()[(r, j)])
            .sum();
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(OracleResult { x, response: j, value });
        }
    }
    Ok(best.expect("grid is never empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facets::{contains, sensitivity_constant, default_eps_grid};
    use crate::game::{best_response_set, class_difference, equiv_class, BR_TOL};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn game(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> GameInstance {
        GameInstance::from_rows(a, b).unwrap()
    }

    fn random_game(rng: &mut impl Rng, m: usize, n: usize) -> GameInstance {
        let mut draw = || {
            Matrix::new(m, n, (0..m * n).map(|_| rng.random_range(-5.0..5.0)).collect()).unwrap()
        };
        let a = draw();
        let b = draw();
        GameInstance::new(a, b).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(u, v)| (u - v).abs() <= tol)
    }

    fn check_invariants(g: &GameInstance, s: &StackelbergSolution) {
        let v: f64 = (0..g.m()).map(|r| s.x_star[r] * g.a()[(r, s.response)]).sum();
        assert!((v - s.value).abs() <= 1e-7);
        assert!(best_response_set(g.b(), &s.x_star, 1e-7).contains(&s.response));
    }

    #[test]
    fn exact_examples() {
        let cases = [
            (
                game(vec![vec![5., 0.], vec![0., 3.]], vec![vec![-2., 2.], vec![3., -3.]]),
                3.0,
                [0.6, 0.4],
                0,
            ),
            (
                game(vec![vec![0., 0.], vec![1., 0.1]], vec![vec![0., 0.1], vec![0., 1.]]),
                0.1,
                [0.0, 1.0],
                1,
            ),
            (
                game(vec![vec![0., 0.], vec![3., 1.]], vec![vec![1., 0.], vec![0., 1.]]),
                1.5,
                [0.5, 0.5],
                0,
            ),
            // learner matrix diag(1, 2): column 1 is a best response iff x1 >= 2/3
            (
                game(vec![vec![2., 0.], vec![3., 1.]], vec![vec![1., 0.], vec![0., 2.]]),
                7.0 / 3.0,
                [2.0 / 3.0, 1.0 / 3.0],
                0,
            ),
        ];
        for (g, v, x, resp) in cases {
            let s = solve_exact(&g).unwrap();
            assert!((s.value - v).abs() < 1e-9, "{} vs {v}", s.value);
            assert!(close(s.x_star.as_slice(), &x, 1e-9), "{:?}", s.x_star);
            assert_eq!(s.response, resp);
            assert_eq!(s.mode, SolveMode::Exact);
            check_invariants(&g, &s);
        }
    }

    #[test]
    fn margin_zero_matches_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..30 {
            let g = random_game(&mut rng, 3, 3);
            let reps = equiv_classes(g.b());
            let exact = solve_exact(&g).unwrap();
            for sign in [MarginSign::Optimistic, MarginSign::Pessimistic] {
                let s = solve_margin(g.a(), &reps, 0.0, sign).unwrap().into_solution().unwrap();
                assert!((s.value - exact.value).abs() < 1e-9);
            }
            let e = solve_extra_pessimistic(g.a(), &reps, 0.03, 0.0).unwrap();
            let p = solve_margin(g.a(), &reps, 0.03, MarginSign::Pessimistic).unwrap();
            assert_eq!(e.per_facet(), p.per_facet());
        }
    }

    #[test]
    fn pessimistic_one_dimensional_example() {
        // E_1^- : x2 − x1 ≤ −0.05  ⟹  p ≥ 0.525, V_1^- = 3 · 0.475
        let a = Matrix::from_rows(vec![vec![0., 0.], vec![3., 1.]]).unwrap();
        let reps = equiv_classes(&Matrix::identity(2));
        let out = solve_margin(&a, &reps, 0.05, MarginSign::Pessimistic).unwrap();
        let v1 = out.per_facet()[0].value().unwrap();
        assert!((v1 - 1.425).abs() < 1e-9);
        assert!(v1 <= 1.5);
        let x = out.per_facet()[0].solution.point().unwrap();
        assert!((x[0] - 0.525).abs() < 1e-9);
    }

    #[test]
    fn kl_game_commit_moves_away_with_margin() {
        let a = Matrix::from_rows(vec![vec![0., 1.], vec![5., 0.]]).unwrap();
        let b = Matrix::from_rows(vec![vec![2., -2.], vec![-3., 3.]]).unwrap();
        let reps = equiv_classes(&b);
        let mut last = 0.0;
        for d in [0.01, 0.02, 0.05] {
            let s = solve_extra_pessimistic(&a, &reps, d, 0.0)
                .unwrap()
                .into_solution()
                .unwrap();
            let dist = (s.x_star[0] - 0.6).abs();
            assert!(dist > last, "d = {d}: {dist} <= {last}");
            last = dist;
        }
    }

    #[test]
    fn over_tightened_margin_is_all_infeasible() {
        let a = Matrix::from_rows(vec![vec![0., 0.], vec![3., 1.]]).unwrap();
        let reps = equiv_classes(&Matrix::identity(2));
        let out = solve_extra_pessimistic(&a, &reps, 0.8, 0.5).unwrap();
        assert!(matches!(out, MarginOutcome::AllInfeasible { .. }));
        assert!(out.per_facet().iter().all(|f| f.value().is_none()));
        assert!(solve_margin(&a, &reps, -0.1, MarginSign::Pessimistic).is_err());
    }

    #[test]
    fn degenerate_learner_short_circuits() {
        let g = game(vec![vec![1., 4.], vec![2., 0.]], vec![vec![1., 1.], vec![3., 3.]]);
        let s = solve_exact(&g).unwrap();
        assert_eq!(s.response, 1);
        assert!((s.value - 4.0).abs() < 1e-12);
        assert!(close(s.x_star.as_slice(), &[1.0, 0.0], 1e-12));
    }

    #[test]
    fn rejects_misaligned_reps() {
        let a = Matrix::identity(2);
        let reps = equiv_classes(&Matrix::identity(3));
        assert!(solve_margin(&a, &reps, 0.1, MarginSign::Optimistic).is_err());
        let swapped = vec![equiv_class(&a, 1).unwrap(), equiv_class(&a, 0).unwrap()];
        assert!(matches!(
            solve_margin(&a, &swapped, 0.1, MarginSign::Optimistic),
            Err(Error::PivotMismatch(0, 1))
        ));
    }

    #[test]
    fn oracle_examples() {
        let g = game(vec![vec![5., 0.], vec![0., 3.]], vec![vec![-2., 2.], vec![3., -3.]]);
        let o = brute_force_oracle(&g, 1000).unwrap();
        assert!((o.value - 3.0).abs() <= 10.0 * 5.0 / 1000.0);

        let pennies = game(vec![vec![1., -1.], vec![-1., 1.]], vec![vec![-1., 1.], vec![1., -1.]]);
        let o = brute_force_oracle(&pennies, 1000).unwrap();
        assert!(o.value.abs() <= 1e-12);
        assert!(close(o.x.as_slice(), &[0.5, 0.5], 1e-12));

        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let g = random_game(&mut rng, 3, 2);
        let o = brute_force_oracle(&g, 1).unwrap();
        let vertex_best = (0..3)
            .map(|r| {
                let x = ProbVector::vertex(3, r);
                g.a()[(r, best_response_optimistic(&g, &x))]
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(o.value, vertex_best);

        let big = random_game(&mut rng, 4, 2);
        assert!(brute_force_oracle(&big, 10).is_err());
        assert!(brute_force_oracle(&g, 1001).is_err());
    }

    #[test]
    fn exact_dominates_grid_and_agrees_within_grid_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..30 {
            let m = rng.random_range(2..=3);
            let g = random_game(&mut rng, m, m);
            let s = solve_exact(&g).unwrap();
            check_invariants(&g, &s);
            let o = brute_force_oracle(&g, 200).unwrap();
            assert!(o.value <= s.value + 1e-9);
            assert!(s.value - o.value <= 4.0 * g.a().max_abs() / 200.0 + 1e-9);
        }
    }

    fn perturbed(rng: &mut impl Rng, b: &Matrix, scale: f64) -> Matrix {
        b.map(|v| v + rng.random_range(-scale..scale))
    }

    #[test]
    fn sandwich_values_per_facet() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let mut checked = 0;
        for _ in 0..50 {
            let g = random_game(&mut rng, 3, 3);
            let hat = perturbed(&mut rng, g.b(), 0.05);
            let reps = equiv_classes(g.b());
            let reps_hat = equiv_classes(&hat);
            let d = reps
                .iter()
                .zip(&reps_hat)
                .map(|(r, h)| class_difference(r, h).unwrap())
                .fold(0.0, f64::max);
            let exact = solve_facets(g.a(), &reps, facet_constraints, SolveMode::Exact).unwrap();
            let pess = solve_margin(g.a(), &reps_hat, d, MarginSign::Pessimistic).unwrap();
            let opt = solve_margin(g.a(), &reps_hat, d, MarginSign::Optimistic).unwrap();
            for i in 0..3 {
                let (v, lo, hi) = (
                    exact.per_facet()[i].value(),
                    pess.per_facet()[i].value(),
                    opt.per_facet()[i].value(),
                );
                if let (Some(v), Some(lo), Some(hi)) = (v, lo, hi) {
                    assert!(lo <= v + 1e-9 && v <= hi + 1e-9, "{lo} {v} {hi}");
                    checked += 1;
                }
                if v.is_some() {
                    assert!(hi.is_some());
                }
            }
        }
        assert!(checked > 50);
    }

    #[test]
    fn margin_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for _ in 0..30 {
            let g = random_game(&mut rng, 3, 3);
            let reps = equiv_classes(g.b());
            let mut prev_pess = f64::INFINITY;
            let mut prev_opt = f64::NEG_INFINITY;
            for k in 0..8 {
                let d = 0.02 * k as f64;
                let value = |sign| {
                    solve_margin(g.a(), &reps, d, sign)
                        .unwrap()
                        .solution()
                        .map_or(f64::NEG_INFINITY, |s| s.value)
                };
                let (p, o) = (value(MarginSign::Pessimistic), value(MarginSign::Optimistic));
                assert!(p <= prev_pess + 1e-9);
                assert!(o >= prev_opt - 1e-9);
                prev_pess = p;
                prev_opt = o;
            }
        }
    }

    /// One-sided Hausdorff distance from `E_i` to `E_i^-`, estimated on a
    /// grid: the largest distance from a point of the exact facet to the
    /// nearest point of the pessimistic one.
    fn sampled_hausdorff(exact: &[Halfspace], pess: &[Halfspace], res: usize) -> Option<f64> {
        let grid = simplex_grid(2, res);
        let inner: Vec<&Vec<f64>> = grid.iter().filter(|x| contains(pess, x, 0.0)).collect();
        if inner.is_empty() {
            return None;
        }
        let mut worst: f64 = 0.0;
        for x in grid.iter().filter(|x| contains(exact, x, 0.0)) {
            let near = inner
                .iter()
                .map(|z| z.iter().zip(x).map(|(a, b)| (a - b).abs()).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(near);
        }
        Some(worst + 2.0 / res as f64)
    }

    #[test]
    fn pessimism_value_loss_bounded_by_sampled_hausdorff() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let mut checked = 0;
        for _ in 0..40 {
            let g = random_game(&mut rng, 2, 2);
            let reps = equiv_classes(g.b());
            let d = 0.05;
            for i in 0..2 {
                let exact = facet_constraints(&reps[i]).unwrap();
                let pess = margin_facet(&reps[i], d, MarginSign::Pessimistic).unwrap();
                let Some(h) = sampled_hausdorff(&exact, &pess, 400) else {
                    continue;
                };
                let col_norm = g.a().col(i).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let v = solve_lp(&LpProblem::new(g.a().col(i), exact)).unwrap().value().unwrap();
                let v_minus = solve_lp(&LpProblem::new(g.a().col(i), pess)).unwrap().value().unwrap();
                assert!(v - v_minus <= h * col_norm + 1e-9, "{v} {v_minus} {h}");
                checked += 1;
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn margin_gap_bounded_by_sensitivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..50 {
            let g = random_game(&mut rng, 2, 2);
            let reps = equiv_classes(g.b());
            for (i, rep) in reps.iter().enumerate() {
                let sen = sensitivity_constant(&rep.columns().transpose(), &default_eps_grid()).unwrap();
                let d = 1.0 / (2.0 * sen) * 0.5;
                let hi = solve_lp(&LpProblem::new(
                    g.a().col(i),
                    margin_facet(rep, d, MarginSign::Optimistic).unwrap(),
                ))
                .unwrap();
                let lo = solve_lp(&LpProblem::new(
                    g.a().col(i),
                    margin_facet(rep, d, MarginSign::Pessimistic).unwrap(),
                ))
                .unwrap();
                if let (Some(hi), Some(lo)) = (hi.value(), lo.value()) {
                    let col_norm = g.a().col(i).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    assert!(hi - lo <= 4.0 * d * col_norm * sen + 1e-6);
                }
            }
        }
    }

    #[test]
    fn exact_response_is_a_best_response() {
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        for _ in 0..50 {
            let g = random_game(&mut rng, 3, 4);
            let s = solve_exact(&g).unwrap();
            assert!(best_response_set(g.b(), &s.x_star, BR_TOL * 100.0).contains(&s.response));
        }
    }
}

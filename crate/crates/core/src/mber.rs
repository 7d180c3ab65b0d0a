//! Minimum-BER transmit-vector optimization for one QPSK input vector.
//!
//! For a channel block `B` (M×K) and target QPSK vector `s`, the per-user
//! figure of merit is `p_m = Re{(r_m s_m*)²} = |r_m|²|s_m|² cos(2φ_m)` with
//! `r = B x`; it is positive exactly when the noiseless receive point sits in
//! the target's quadrant, and grows as it moves away from the decision
//! thresholds. All users are maximized jointly through the product
//! `det(P) = Π p_m`, over the box relaxation of the QPSK alphabet
//! (|Re xₙ| ≤ 1/√2, |Im xₙ| ≤ 1/√2), by projected gradient ascent with a
//! backtracking step. The final iterate is 1-bit quantized for transmission.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::constellation::{quantize_1bit, QpskSymbol, QPSK_COMPONENT};
use crate::{Error, Result};

/// One relaxed optimization instance: a channel block and its target.
#[derive(Debug, Clone)]
pub struct MberProblem {
    channel_block: DMatrix<Complex64>,
    block_adjoint: DMatrix<Complex64>,
    target: Vec<QpskSymbol>,
    target_values: DVector<Complex64>,
}

impl MberProblem {
    /// Requires K ≥ M ≥ 1 (at least as many antennas as users in the block).
    pub fn new(channel_block: DMatrix<Complex64>, target: Vec<QpskSymbol>) -> Result<Self> {
        let (m, k) = channel_block.shape();
        if m < 1 || k < m {
            return Err(Error::InvalidConfig(format!(
                "channel block must be M x K with K >= M >= 1, got {m}x{k}"
            )));
        }
        if target.len() != m {
            return Err(Error::LengthMismatch {
                left: target.len(),
                right: m,
            });
        }
        let block_adjoint = channel_block.adjoint();
        let target_values = DVector::from_iterator(m, target.iter().map(|q| q.value()));
        Ok(Self {
            channel_block,
            block_adjoint,
            target,
            target_values,
        })
    }

    pub fn n_users(&self) -> usize {
        self.channel_block.nrows()
    }

    pub fn n_antennas(&self) -> usize {
        self.channel_block.ncols()
    }

    pub fn channel_block(&self) -> &DMatrix<Complex64> {
        &self.channel_block
    }

    pub fn target(&self) -> &[QpskSymbol] {
        &self.target
    }
}

/// Step-size and stopping parameters for [`solve`].
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Initial ascent step μ, reset at every iteration.
    pub step_init: f64,
    /// Multiplicative shrink applied to μ while the step would decrease the objective.
    pub armijo_shrink: f64,
    /// Terminate once the ∞-norm change of the iterate falls below this.
    pub stall_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            step_init: 0.25,
            armijo_shrink: 0.5,
            stall_tol: 1e-5,
        }
    }
}

/// Maximum number of step halvings per iteration before the step is abandoned.
const MAX_BACKTRACKS: usize = 30;

/// Outcome of one relaxed solve.
#[derive(Debug, Clone)]
pub struct SolverResult {
    /// Final iterate inside the box relaxation.
    pub x_relaxed: DVector<Complex64>,
    /// 1-bit quantization of the final iterate; what the DACs radiate.
    pub x_quantized: Vec<QpskSymbol>,
    /// det(P) achieved by `x_relaxed`. Non-positive values flag a failed
    /// instance (some user left its quadrant); they are returned, not hidden.
    pub objective: f64,
    pub iterations_used: usize,
}

/// Per-user metric p = Re{(r·s*)²}.
pub fn per_user_metric(r: Complex64, s: Complex64) -> f64 {
    let u = r * s.conj();
    (u * u).re
}

/// det(P) = Π_m p_m for the receive vector r = B·x.
pub fn objective(problem: &MberProblem, x: &DVector<Complex64>) -> f64 {
    let r = &problem.channel_block * x;
    r.iter()
        .zip(problem.target_values.iter())
        .map(|(&rm, &sm)| per_user_metric(rm, sm))
        .product()
}

/// Ascent direction of det(P): the Wirtinger derivative with respect to
/// conj(x),
///
/// ```text
/// g = Σ_m [Π_{k≠m} p_k] · (conj(r_m)·s_m) · s_m · conj(h_m)ᵀ
/// ```
///
/// where `h_m` is row m of the block. The directional derivative of
/// [`objective`] along a perturbation Δ equals 2·Re{gᴴΔ}.
pub fn gradient(problem: &MberProblem, x: &DVector<Complex64>) -> DVector<Complex64> {
    let m = problem.n_users();
    let r = &problem.channel_block * x;
    let p: Vec<f64> = (0..m)
        .map(|i| per_user_metric(r[i], problem.target_values[i]))
        .collect();
    let mut weights = DVector::from_element(m, Complex64::new(0.0, 0.0));
    for i in 0..m {
        let others: f64 = p
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i)
            .map(|(_, &v)| v)
            .product();
        let s = problem.target_values[i];
        weights[i] = Complex64::from(others) * r[i].conj() * s * s;
    }
    &problem.block_adjoint * weights
}

/// Clamps real and imaginary parts independently to [−1/√2, 1/√2].
pub fn project_box(x: &DVector<Complex64>) -> DVector<Complex64> {
    x.map(|z| {
        Complex64::new(
            z.re.clamp(-QPSK_COMPONENT, QPSK_COMPONENT),
            z.im.clamp(-QPSK_COMPONENT, QPSK_COMPONENT),
        )
    })
}

fn inf_norm(x: &DVector<Complex64>) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// ∞-norm of the ascent direction restricted to moves the box projection
/// would keep: a component already at a bound contributes only if it points
/// back inside.
fn reduced_inf_norm(x: &DVector<Complex64>, g: &DVector<Complex64>) -> f64 {
    let live = |pos: f64, grad: f64| -> f64 {
        if (pos >= QPSK_COMPONENT && grad > 0.0) || (pos <= -QPSK_COMPONENT && grad < 0.0) {
            0.0
        } else {
            grad.abs()
        }
    };
    x.iter()
        .zip(g.iter())
        .map(|(xz, gz)| live(xz.re, gz.re).max(live(xz.im, gz.im)))
        .fold(0.0, f64::max)
}

/// Interference-free start, scaled so the largest component just touches
/// the box. The zero-forcing direction Bᴴ(BBᴴ)⁻¹s gives r ∝ s, so every p_m
/// is strictly positive from the first iterate and monotone ascent can never
/// hand a user the wrong quadrant by continuous drift. Falls back to the
/// matched filter when BBᴴ is singular.
fn initial_point(problem: &MberProblem) -> DVector<Complex64> {
    let gram = &problem.channel_block * &problem.block_adjoint;
    let direction = gram
        .lu()
        .solve(&problem.target_values)
        .map(|w| &problem.block_adjoint * w)
        .unwrap_or_else(|| &problem.block_adjoint * &problem.target_values);
    let peak = direction
        .iter()
        .map(|z| z.re.abs().max(z.im.abs()))
        .fold(0.0, f64::max);
    if peak > 0.0 {
        project_box(&(direction * Complex64::from(QPSK_COMPONENT / peak)))
    } else {
        DVector::from_element(problem.n_antennas(), Complex64::new(0.0, 0.0))
    }
}

/// Upper bound on ascent/refinement alternations inside [`solve`].
const MAX_ROUNDS: usize = 8;

/// True when every user's receive sample sits in the open half-plane of its
/// target, Re{r_m s_m*} > 0. The per-user metric is blind to a common sign
/// flip (cos 2φ = cos 2(φ+π)), so det(P) alone would happily park users on
/// the antipode of their symbol; every accepted iterate and corner move is
/// therefore constrained to the aligned half-planes, which is exactly the
/// φ ∈ (−π/4, π/4) domain the quadrant criterion presumes.
fn alignment_count(problem: &MberProblem, r: &DVector<Complex64>) -> usize {
    r.iter()
        .zip(problem.target_values.iter())
        .filter(|(&rm, &sm)| (rm * sm.conj()).re > 0.0)
        .count()
}

/// Maximizes det(P) over the box relaxation, keeping every user aligned with
/// its target half-plane, and returns the best quantized transmit vector it
/// saw.
///
/// Rounds of projected gradient ascent alternate with a greedy corner
/// refinement: ascent proposes `project_box(x + μ·g)` and halves μ until the
/// objective stops decreasing (equal is accepted) while staying aligned;
/// when it stalls, the iterate is quantized and single antennas (then
/// antenna pairs) are re-assigned QPSK values while that strictly helps. A
/// refined corner is itself a box point, so when it beats the relaxed
/// iterate the ascent restarts from it. The returned iterate is the best
/// aligned corner seen when that improves on the final iterate's direct
/// quantization, otherwise the final relaxed iterate. Always returns; a
/// degenerate all-zero block simply returns the initial point.
pub fn solve(problem: &MberProblem, config: &SolverConfig) -> SolverResult {
    solve_traced(problem, config).0
}

/// [`solve`] plus the run's sequence of accepted objective values (the
/// initial point's value first); used to audit monotonicity.
pub fn solve_traced(problem: &MberProblem, config: &SolverConfig) -> (SolverResult, Vec<f64>) {
    let (mut result, trace) = run_from(problem, config, initial_point(problem));

    let mut best = {
        let r = &problem.channel_block
            * DVector::from_iterator(
                result.x_quantized.len(),
                result.x_quantized.iter().map(|q| q.value()),
            );
        if alignment_count(problem, &r) == problem.n_users() {
            corner_objective(problem, &r)
        } else {
            f64::NEG_INFINITY
        }
    };

    // The det-product gradient equalizes users, so strongly asymmetric optima
    // hide from the ascent. Refining the per-user matched-filter corners and
    // the summed beam covers that family; the best aligned corner wins.
    let mut seen = std::collections::HashSet::new();
    seen.insert(result.x_quantized.clone());
    let mut seed_corners: Vec<Vec<QpskSymbol>> = Vec::with_capacity(problem.n_users() + 1);
    for user in 0..problem.n_users() {
        let s_user = problem.target_values[user];
        let beam: Vec<Complex64> = problem
            .channel_block
            .row(user)
            .iter()
            .map(|h| h.conj() * s_user)
            .collect();
        seed_corners.push(quantize_1bit(&beam));
    }
    let mf_sum = &problem.block_adjoint * &problem.target_values;
    seed_corners.push(quantize_1bit(mf_sum.as_slice()));
    for corner in seed_corners {
        if !seen.insert(corner.clone()) {
            continue;
        }
        let refined = refine_corner(problem, corner, &mut Vec::new(), f64::INFINITY);
        if refined.aligned && refined.objective > best {
            best = refined.objective;
            result = SolverResult {
                x_relaxed: DVector::from_iterator(
                    refined.corner.len(),
                    refined.corner.iter().map(|q| q.value()),
                ),
                x_quantized: refined.corner,
                objective: refined.objective,
                iterations_used: result.iterations_used,
            };
        }
    }
    (result, trace)
}

/// One alternating ascent/refinement run from a fixed starting point.
fn run_from(
    problem: &MberProblem,
    config: &SolverConfig,
    start: DVector<Complex64>,
) -> (SolverResult, Vec<f64>) {
    let mut x = start;
    let mut f = objective(problem, &x);
    let mut trace = Vec::with_capacity(config.max_iters + 1);
    trace.push(f);
    let mut iterations_used = 0;
    let mut best_corner: Option<(Vec<QpskSymbol>, f64)> = None;

    for _ in 0..MAX_ROUNDS {
        let budget = config.max_iters - iterations_used;
        iterations_used += ascend(problem, config, budget, &mut x, &mut f, &mut trace);

        let refined = refine_corner(problem, quantize_1bit(x.as_slice()), &mut trace, f);
        if refined.aligned
            && best_corner
                .as_ref()
                .is_none_or(|(_, fb)| refined.objective > *fb)
        {
            best_corner = Some((refined.corner.clone(), refined.objective));
        }
        if !refined.aligned || refined.objective <= f || iterations_used >= config.max_iters {
            break; // no aligned corner escape left (or budget exhausted)
        }
        x = DVector::from_iterator(x.len(), refined.corner.iter().map(|q| q.value()));
        f = refined.objective;
    }

    let x_quantized = quantize_1bit(x.as_slice());
    let r_direct = &problem.channel_block
        * DVector::from_iterator(x_quantized.len(), x_quantized.iter().map(|q| q.value()));
    let direct = corner_objective(problem, &r_direct);
    let direct_aligned = alignment_count(problem, &r_direct) == problem.n_users();
    let result = match best_corner {
        Some((corner, f_corner)) if f_corner > direct || !direct_aligned => SolverResult {
            x_relaxed: DVector::from_iterator(corner.len(), corner.iter().map(|q| q.value())),
            x_quantized: corner,
            objective: f_corner,
            iterations_used,
        },
        _ => SolverResult {
            x_relaxed: x,
            x_quantized,
            objective: f,
            iterations_used,
        },
    };
    (result, trace)
}

/// One run of projected gradient ascent until stall or budget exhaustion.
/// Returns the number of iterations consumed.
fn ascend(
    problem: &MberProblem,
    config: &SolverConfig,
    budget: usize,
    x: &mut DVector<Complex64>,
    f: &mut f64,
    trace: &mut Vec<f64>,
) -> usize {
    let m = problem.n_users();
    let mut used = 0;
    for _ in 0..budget {
        used += 1;
        let g = gradient(problem, x);
        // Scale μ by the feasible part of the gradient: components pushing an
        // already-clamped coordinate further out would be undone by the
        // projection anyway and must not dwarf the step of the live ones.
        let g_scale = reduced_inf_norm(x, &g);
        if g_scale <= 0.0 {
            break;
        }
        let mut mu = config.step_init / g_scale;
        let mut accepted = None;
        for _ in 0..=MAX_BACKTRACKS {
            let candidate = project_box(&(&*x + &g * Complex64::from(mu)));
            let r = &problem.channel_block * &candidate;
            let fc = corner_objective(problem, &r);
            if fc >= *f && alignment_count(problem, &r) == m {
                accepted = Some((candidate, fc));
                break;
            }
            mu *= config.armijo_shrink;
        }
        let Some((next, fc)) = accepted else {
            break; // no aligned non-decreasing step exists at this scale
        };
        let moved = inf_norm(&(&next - &*x));
        *x = next;
        *f = fc;
        trace.push(*f);
        if moved < config.stall_tol {
            break;
        }
    }
    used
}

/// Outcome of one greedy corner refinement.
struct RefinedCorner {
    corner: Vec<QpskSymbol>,
    objective: f64,
    /// Whether every user ended aligned with its target half-plane.
    aligned: bool,
}

/// Greedy improvement over the quantized alphabet: single-antenna sweeps
/// until stable, then one steepest two-antenna move to escape single-swap
/// optima, repeated until neither helps. Moves are ranked by the pair
/// (users aligned, det(P)) lexicographically, so an unaligned start is
/// repaired first and det never rules while a user sits on the wrong side.
/// The receive vector is updated incrementally; every applied move strictly
/// increases the ranking over a finite set, so this terminates.
fn refine_corner(
    problem: &MberProblem,
    mut x: Vec<QpskSymbol>,
    trace: &mut Vec<f64>,
    floor: f64,
) -> RefinedCorner {
    let k = problem.n_antennas();
    let m = problem.n_users();
    let block = &problem.channel_block;
    let mut r = block * DVector::from_iterator(k, x.iter().map(|q| q.value()));
    let mut f = corner_objective(problem, &r);
    let mut count = alignment_count(problem, &r);
    let beats = |count_new: usize, f_new: f64, count_old: usize, f_old: f64| {
        count_new > count_old || (count_new == count_old && count_new == m && f_new > f_old)
    };
    let push = |trace: &mut Vec<f64>, count: usize, f: f64| {
        if count == m && f > floor {
            trace.push(f);
        }
    };
    loop {
        // single-antenna sweeps
        loop {
            let mut improved = false;
            for n in 0..k {
                let column = block.column(n);
                let mut best: Option<(QpskSymbol, f64, usize, DVector<Complex64>)> = None;
                for idx in 0..4 {
                    let candidate = QpskSymbol::from_index(idx);
                    if candidate == x[n] {
                        continue;
                    }
                    let shifted = &r + column * (candidate.value() - x[n].value());
                    let fc = corner_objective(problem, &shifted);
                    let cc = alignment_count(problem, &shifted);
                    let (base_c, base_f) = best
                        .as_ref()
                        .map_or((count, f), |b| (b.2, b.1));
                    if beats(cc, fc, base_c, base_f) {
                        best = Some((candidate, fc, cc, shifted));
                    }
                }
                if let Some((candidate, fc, cc, shifted)) = best {
                    x[n] = candidate;
                    f = fc;
                    count = cc;
                    r = shifted;
                    improved = true;
                    push(trace, count, f);
                }
            }
            if !improved {
                break;
            }
        }
        // steepest pair move
        let mut best_pair: Option<(usize, QpskSymbol, usize, QpskSymbol, f64, usize)> = None;
        for i in 0..k {
            let col_i = block.column(i);
            for idx_i in 0..4 {
                let cand_i = QpskSymbol::from_index(idx_i);
                if cand_i == x[i] {
                    continue;
                }
                let r_i = &r + col_i * (cand_i.value() - x[i].value());
                for j in (i + 1)..k {
                    let col_j = block.column(j);
                    for idx_j in 0..4 {
                        let cand_j = QpskSymbol::from_index(idx_j);
                        if cand_j == x[j] {
                            continue;
                        }
                        let shifted = &r_i + col_j * (cand_j.value() - x[j].value());
                        let fc = corner_objective(problem, &shifted);
                        let cc = alignment_count(problem, &shifted);
                        let (base_c, base_f) = best_pair
                            .as_ref()
                            .map_or((count, f), |b| (b.5, b.4));
                        if beats(cc, fc, base_c, base_f) {
                            best_pair = Some((i, cand_i, j, cand_j, fc, cc));
                        }
                    }
                }
            }
        }
        let Some((i, cand_i, j, cand_j, fc, cc)) = best_pair else {
            break;
        };
        r += block.column(i) * (cand_i.value() - x[i].value())
            + block.column(j) * (cand_j.value() - x[j].value());
        x[i] = cand_i;
        x[j] = cand_j;
        f = fc;
        count = cc;
        push(trace, count, f);
    }
    RefinedCorner {
        corner: x,
        objective: f,
        aligned: count == m,
    }
}

fn corner_objective(problem: &MberProblem, r: &DVector<Complex64>) -> f64 {
    r.iter()
        .zip(problem.target_values.iter())
        .map(|(&rm, &sm)| per_user_metric(rm, sm))
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    const S: f64 = QPSK_COMPONENT;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn qpsk(re_pos: bool, im_pos: bool) -> QpskSymbol {
        QpskSymbol::new(re_pos, im_pos)
    }

    fn random_gaussian_matrix(seed: u64, m: usize, k: usize) -> DMatrix<Complex64> {
        let mut rng = rng_from_seed(seed);
        DMatrix::from_fn(m, k, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    fn random_target(seed: u64, m: usize) -> Vec<QpskSymbol> {
        let mut rng = rng_from_seed(seed ^ 0xABCD);
        (0..m)
            .map(|_| QpskSymbol::new(rng.random(), rng.random()))
            .collect()
    }

    fn random_box_point(seed: u64, k: usize) -> DVector<Complex64> {
        let mut rng = rng_from_seed(seed ^ 0x5EED);
        DVector::from_fn(k, |_, _| {
            c(
                rng.random_range(-S..S) * 0.9,
                rng.random_range(-S..S) * 0.9,
            )
        })
    }

    #[test]
    fn per_user_metric_examples() {
        let s = c(S, S);
        assert!((per_user_metric(s, s) - 1.0).abs() < 1e-15);
        // r = j·s: phase offset π/2 flips the sign
        let r = Complex64::i() * s;
        assert!((per_user_metric(r, s) + 1.0).abs() < 1e-15);
        // r = 2s: |r|²|s|²·cos(0) = 4
        assert!((per_user_metric(s * 2.0, s) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn per_user_metric_matches_cosine_form() {
        let mut rng = rng_from_seed(11);
        for _ in 0..1000 {
            let r = c(rng.sample(StandardNormal), rng.sample(StandardNormal));
            let s = c(rng.sample(StandardNormal), rng.sample(StandardNormal));
            let phi = r.arg() - s.arg();
            let cos_form = r.norm_sqr() * s.norm_sqr() * (2.0 * phi).cos();
            let p = per_user_metric(r, s);
            let scale = p.abs().max(cos_form.abs()).max(1e-30);
            assert!((p - cos_form).abs() / scale < 1e-10);
        }
    }

    #[test]
    fn objective_reduces_to_single_user_metric() {
        let mut row = vec![c(0.0, 0.0); 4];
        row[0] = c(1.0, 0.0);
        let block = DMatrix::from_row_slice(1, 4, &row);
        let problem = MberProblem::new(block, vec![qpsk(true, true)]).unwrap();
        let mut x = DVector::from_element(4, c(0.0, 0.0));
        x[0] = c(S, S);
        assert!((objective(&problem, &x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn objective_is_product_of_independent_metrics() {
        let block = random_gaussian_matrix(21, 2, 5);
        let target = random_target(21, 2);
        let problem = MberProblem::new(block.clone(), target.clone()).unwrap();
        let x = random_box_point(21, 5);
        let r = &block * &x;
        let expected: f64 = (0..2)
            .map(|i| per_user_metric(r[i], target[i].value()))
            .product();
        assert!((objective(&problem, &x) - expected).abs() <= 1e-12 * expected.abs().max(1.0));
    }

    #[test]
    fn objective_scales_as_c_to_the_2m() {
        for (seed, m, k) in [(1u64, 1usize, 4usize), (2, 2, 6), (3, 3, 9)] {
            let block = random_gaussian_matrix(seed, m, k);
            let target = random_target(seed, m);
            let x = random_box_point(seed, k);
            let scale = 1.7;
            let base = objective(&MberProblem::new(block.clone(), target.clone()).unwrap(), &x);
            let scaled = objective(
                &MberProblem::new(block * Complex64::from(scale), target).unwrap(),
                &x,
            );
            let expected = scale.powi(2 * m as i32) * base;
            assert!(
                (scaled - expected).abs() <= 1e-10 * expected.abs().max(1e-30),
                "m={m}: {scaled} vs {expected}"
            );
        }
    }

    /// Central-difference directional derivative of the objective.
    fn numeric_directional(
        problem: &MberProblem,
        x: &DVector<Complex64>,
        direction: &DVector<Complex64>,
        eps: f64,
    ) -> f64 {
        let step = direction * Complex64::from(eps);
        let plus = objective(problem, &(x + &step));
        let minus = objective(problem, &(x - &step));
        (plus - minus) / (2.0 * eps)
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut worst: f64 = 0.0;
        for seed in 0..20u64 {
            let (m, k) = (2, 6);
            let block = random_gaussian_matrix(seed.wrapping_add(100), m, k);
            let target = random_target(seed.wrapping_add(100), m);
            let problem = MberProblem::new(block, target).unwrap();
            let x = random_box_point(seed.wrapping_add(100), k);
            let g = gradient(&problem, &x);

            let mut dir_rng = rng_from_seed(seed ^ 0xD12);
            let dir = DVector::from_fn(k, |_, _| {
                c(dir_rng.sample(StandardNormal), dir_rng.sample(StandardNormal))
            });
            let dir = &dir * Complex64::from(1.0 / dir.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());

            let numeric = numeric_directional(&problem, &x, &dir, 1e-6);
            let analytic = 2.0 * g.dotc(&dir).re;
            let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-12);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-6, "worst relative error {worst}");
    }

    #[test]
    fn gradient_vanishes_at_stationary_point() {
        // r = 0 zeroes every term of the gradient sum
        let block = random_gaussian_matrix(5, 2, 4);
        let target = random_target(5, 2);
        let problem = MberProblem::new(block, target).unwrap();
        let x = DVector::from_element(4, c(0.0, 0.0));
        let g = gradient(&problem, &x);
        assert!(inf_norm(&g) < 1e-14);
    }

    #[test]
    fn gradient_scales_as_c_to_the_2m() {
        let (m, k) = (2, 5);
        let block = random_gaussian_matrix(77, m, k);
        let target = random_target(77, m);
        let x = random_box_point(77, k);
        let scale = 2.0;
        let g1 = gradient(&MberProblem::new(block.clone(), target.clone()).unwrap(), &x);
        let g2 = gradient(
            &MberProblem::new(block * Complex64::from(scale), target).unwrap(),
            &x,
        );
        let factor = scale.powi(2 * m as i32);
        for i in 0..k {
            assert!((g2[i] - g1[i] * Complex64::from(factor)).norm() < 1e-9 * g2[i].norm().max(1.0));
        }
    }

    #[test]
    fn project_box_clamps_component_wise() {
        let x = DVector::from_vec(vec![c(0.3, 0.2), c(5.0, -5.0), c(-0.9, 0.1)]);
        let p = project_box(&x);
        assert_eq!(p[0], c(0.3, 0.2));
        assert_eq!(p[1], c(S, -S));
        assert_eq!(p[2], c(-S, 0.1));
    }

    #[test]
    fn project_box_idempotent_and_nonexpansive() {
        let mut rng = rng_from_seed(99);
        for _ in 0..1000 {
            let x = DVector::from_fn(6, |_, _| {
                c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))
            });
            let y = DVector::from_fn(6, |_, _| {
                c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))
            });
            let px = project_box(&x);
            assert_eq!(project_box(&px), px);
            let py = project_box(&y);
            assert!(inf_norm(&(&px - &py)) <= inf_norm(&(&x - &y)) + 1e-15);
        }
    }

    #[test]
    fn solve_single_user_single_antenna_hits_the_aligned_corner() {
        let block = DMatrix::from_element(1, 1, c(1.0, 0.0));
        let target = vec![qpsk(true, true)];
        let problem = MberProblem::new(block, target).unwrap();
        let result = solve(&problem, &SolverConfig::default());
        assert_eq!(result.x_quantized, vec![qpsk(true, true)]);
        assert!((result.objective - 1.0).abs() < 1e-9);
    }

    /// Exhaustive maximum of the objective over all 4^K quantized candidates.
    fn brute_force_max(problem: &MberProblem) -> (f64, Vec<QpskSymbol>) {
        let k = problem.n_antennas();
        let mut best = (f64::NEG_INFINITY, Vec::new());
        for idx in 0..4usize.pow(k as u32) {
            let candidate: Vec<QpskSymbol> = (0..k)
                .map(|pos| QpskSymbol::from_index((idx >> (2 * pos)) & 3))
                .collect();
            let x = DVector::from_iterator(k, candidate.iter().map(|q| q.value()));
            let f = objective(problem, &x);
            if f > best.0 {
                best = (f, candidate);
            }
        }
        best
    }

    #[test]
    fn solve_two_antenna_instance_matches_brute_force() {
        let block = DMatrix::from_row_slice(1, 2, &[c(1.0, 0.0), c(-1.0, 0.0)]);
        let problem = MberProblem::new(block, vec![qpsk(true, true)]).unwrap();
        let (best_f, best_x) = brute_force_max(&problem);
        assert!((best_f - 4.0).abs() < 1e-12);

        let result = solve(&problem, &SolverConfig::default());
        assert_eq!(result.x_quantized, best_x);
        assert_eq!(result.x_quantized, vec![qpsk(true, true), qpsk(false, false)]);
        assert!((result.objective - 4.0).abs() < 1e-6);
    }

    #[test]
    fn solve_is_near_optimal_on_tiny_instances() {
        for seed in 0..8u64 {
            let m = 1 + (seed as usize) % 2;
            let block = random_gaussian_matrix(seed.wrapping_add(300), m, 4);
            let target = random_target(seed.wrapping_add(300), m);
            let problem = MberProblem::new(block, target).unwrap();
            let (best, _) = brute_force_max(&problem);
            let result = solve(&problem, &SolverConfig::default());
            let x = DVector::from_iterator(4, result.x_quantized.iter().map(|q| q.value()));
            let achieved = objective(&problem, &x);
            assert!(
                achieved >= 0.95 * best,
                "seed {seed}: achieved {achieved} < 0.95 x {best}"
            );
        }
    }

    #[test]
    fn accepted_objectives_never_decrease() {
        for seed in 0..10u64 {
            let block = random_gaussian_matrix(seed.wrapping_add(400), 3, 9);
            let target = random_target(seed.wrapping_add(400), 3);
            let problem = MberProblem::new(block, target).unwrap();
            let (_, trace) = solve_traced(&problem, &SolverConfig::default());
            for pair in trace.windows(2) {
                assert!(pair[1] >= pair[0]);
            }
        }
    }

    #[test]
    fn iterates_stay_in_the_box() {
        let block = random_gaussian_matrix(500, 2, 8);
        let target = random_target(500, 2);
        let problem = MberProblem::new(block, target).unwrap();
        let result = solve(&problem, &SolverConfig::default());
        for z in result.x_relaxed.iter() {
            assert!(z.re.abs() <= S + 1e-12 && z.im.abs() <= S + 1e-12);
        }
        assert_eq!(result.x_quantized, quantize_1bit(result.x_relaxed.as_slice()));
    }

    #[test]
    fn zero_channel_returns_initial_point() {
        let block = DMatrix::from_element(2, 4, c(0.0, 0.0));
        let target = random_target(1, 2);
        let problem = MberProblem::new(block, target).unwrap();
        let result = solve(&problem, &SolverConfig::default());
        assert_eq!(result.objective, 0.0);
        assert!(inf_norm(&result.x_relaxed) == 0.0);
    }

    #[test]
    fn rejects_wide_or_empty_problems() {
        let block = DMatrix::from_element(3, 2, c(1.0, 0.0));
        assert!(MberProblem::new(block, random_target(1, 3)).is_err());
        let block = DMatrix::from_element(2, 4, c(1.0, 0.0));
        assert!(MberProblem::new(block, random_target(1, 3)).is_err());
    }
}

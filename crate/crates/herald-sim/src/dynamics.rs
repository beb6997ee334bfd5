//! Time evolution: Lindblad right-hand side, adaptive Runge-Kutta
//! integration, exact spectral propagation by connected blocks, the
//! closed-form ground-manifold propagator, and herald extraction.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Solve};

use crate::effective::EffectiveModel;
use crate::error::SimError;
use crate::hilbert::{DensityMatrix, Operator, HERALD_EPS};
use crate::model::ModelOperators;
use crate::C64;

/// Result of a full-model evolution.
pub struct EvolutionResult {
    pub rho_final: DensityMatrix,
    pub times: Vec<f64>,
    /// Probability of finding the auxiliary atom in `|g>` at each sample.
    pub herald_prob_trace: Vec<f64>,
    pub steps: usize,
    pub max_step_error: f64,
}

/// Lindblad right-hand side
/// `i [rho, H] + (1/2) sum (2 L rho L^+ - rho L^+ L - L^+ L rho)`.
pub fn lindblad_rhs(rho: &Array2<C64>, h: &Operator, ls: &[&Operator]) -> Array2<C64> {
    let i = C64::new(0.0, 1.0);
    let h_rho = h.mul_dense(rho);
    let rho_h = h.mul_dense_right(rho);
    let mut out = (&rho_h - &h_rho).mapv(|v| i * v);
    for l in ls {
        let l_rho = l.mul_dense(rho);
        let l_rho_ld = l.adjoint().mul_dense_right(&l_rho);
        let ldl_rho = l.adjoint().mul_dense(&l_rho);
        let rho_ldl = {
            let rho_ld = l.adjoint().mul_dense_right(rho);
            l.mul_dense_right(&rho_ld)
        };
        out += &l_rho_ld;
        out.zip_mut_with(&ldl_rho, |a, &b| *a -= 0.5 * b);
        out.zip_mut_with(&rho_ldl, |a, &b| *a -= 0.5 * b);
    }
    out
}

// Dormand-Prince 5(4) tableau
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive embedded Runge-Kutta 5(4) on the dense density matrix.
///
/// Per-step error is controlled at `tol` (relative to the state norm) and the
/// final step is clamped to land exactly on `t_final` and on each requested
/// sample time. Reports step-size underflow rather than loosening `tol`.
pub fn evolve(
    rho0: &DensityMatrix,
    m: &ModelOperators,
    t_final: f64,
    tol: f64,
    n_samples: usize,
) -> Result<EvolutionResult, SimError> {
    if tol <= 0.0 {
        return Err(SimError::IntegratorFailure("tol must be positive".into()));
    }
    let h_total = m.h_total();
    let ls: Vec<&Operator> = m.lindblads.iter().map(|(_, l)| l).collect();
    let rhs = |r: &Array2<C64>| lindblad_rhs(r, &h_total, &ls);

    let sample_times: Vec<f64> = if n_samples < 2 {
        vec![t_final]
    } else {
        (0..n_samples)
            .map(|k| t_final * k as f64 / (n_samples - 1) as f64)
            .collect()
    };

    let mut y = rho0.data.clone();
    let mut t = 0.0f64;
    let mut h = (t_final / 100.0).max(1e-12);
    let mut steps = 0usize;
    let mut max_err = 0.0f64;
    let mut traces = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0usize;
    let y_scale =
        |y: &Array2<C64>| -> f64 { y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1.0) };

    while next_sample < sample_times.len() && sample_times[next_sample] <= t + 1e-300 {
        traces.push(herald_probability(&DensityMatrix::new(
            rho0.space.clone(),
            y.clone(),
        )?));
        next_sample += 1;
    }

    let mut k: Vec<Array2<C64>> = Vec::with_capacity(7);
    while t < t_final {
        let target = if next_sample < sample_times.len() {
            sample_times[next_sample].min(t_final)
        } else {
            t_final
        };
        let mut h_step = h.min(target - t);
        if h_step < 1e-14 * t_final.max(1.0) {
            h_step = 1e-14 * t_final.max(1.0);
        }

        k.clear();
        k.push(rhs(&y));
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = DP_A[s][j];
                if a != 0.0 {
                    ys.zip_mut_with(kj, |v, &w| *v += C64::new(h_step * a, 0.0) * w);
                }
            }
            let _ = DP_C[s];
            k.push(rhs(&ys));
        }
        let mut y5 = y.clone();
        let mut err_mat: Array2<C64> = Array2::zeros(y.raw_dim());
        for (j, kj) in k.iter().enumerate() {
            if DP_B5[j] != 0.0 {
                y5.zip_mut_with(kj, |v, &w| *v += C64::new(h_step * DP_B5[j], 0.0) * w);
            }
            let db = DP_B5[j] - DP_B4[j];
            if db != 0.0 {
                err_mat.zip_mut_with(kj, |v, &w| *v += C64::new(h_step * db, 0.0) * w);
            }
        }
        let err = err_mat.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() / y_scale(&y);

        if err <= tol {
            t += h_step;
            y = y5;
            steps += 1;
            max_err = max_err.max(err);
            while next_sample < sample_times.len()
                && sample_times[next_sample] <= t + 1e-12 * t_final.max(1.0)
            {
                traces.push(herald_probability(&DensityMatrix::new(
                    rho0.space.clone(),
                    y.clone(),
                )?));
                next_sample += 1;
            }
        }
        let safety = 0.9 * (tol / err.max(1e-300)).powf(0.2);
        h = h_step * safety.clamp(0.2, 5.0);
        if h < 1e-13 * t_final.max(1.0) {
            return Err(SimError::IntegratorFailure(format!(
                "step size underflow at t = {t:.6e} (err {err:.3e}, tol {tol:.3e}); \
                 the problem is too stiff for explicit stepping"
            )));
        }
        if steps > 50_000_000 {
            return Err(SimError::IntegratorFailure("step budget exhausted".into()));
        }
    }

    Ok(EvolutionResult {
        rho_final: DensityMatrix::new(rho0.space.clone(), y)?,
        times: sample_times,
        herald_prob_trace: traces,
        steps,
        max_step_error: max_err,
    })
}

/// Probability of the auxiliary atom being in `|g>` (trace of that block).
pub fn herald_probability(rho: &DensityMatrix) -> f64 {
    let space = &rho.space;
    let aux = match space.slot_named("aux") {
        Some(a) => a,
        None => return rho.trace().re,
    };
    let g = space.slots[aux].level_index("g").unwrap();
    (0..space.dim())
        .filter(|&i| space.state(i)[aux] == g)
        .map(|i| rho.data[(i, i)].re)
        .sum()
}

/// Exact propagator for a fixed model, built once and evaluable at any time.
///
/// The generator decomposes over connected components of the joint support
/// graph of `H_total` and the collapse operators; each component pair evolves
/// under its own vectorized generator, which is diagonalized once. For the
/// models here the largest component stays small enough that this is both
/// faster and better conditioned than explicit stepping through the stiff
/// frame energies.
pub struct SpectralPropagator {
    space: std::sync::Arc<crate::hilbert::HilbertSpace>,
    dim: usize,
    blocks: Vec<SpectralBlock>,
}

struct SpectralBlock {
    rows: Vec<usize>,
    cols: Vec<usize>,
    eigvals: Array1<C64>,
    eigvecs: Array2<C64>,
    y0: Array1<C64>,
}

fn connected_components(m: &ModelOperators) -> Vec<usize> {
    let dim = m.space.dim();
    let mut parent: Vec<usize> = (0..dim).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        let mut c = i;
        while parent[c] != c {
            let next = parent[c];
            parent[c] = r;
            c = next;
        }
        r
    }
    let union = |parent: &mut Vec<usize>, a: usize, b: usize| {
        let ra = find(parent, a);
        let rb = find(parent, b);
        if ra != rb {
            parent[ra] = rb;
        }
    };
    let h = m.h_total();
    for &(r, c, _) in &h.entries {
        union(&mut parent, r as usize, c as usize);
    }
    for (_, l) in &m.lindblads {
        for &(r, c, _) in &l.entries {
            union(&mut parent, r as usize, c as usize);
        }
    }
    (0..dim).map(|i| find(&mut parent, i)).collect()
}

/// States that can ever acquire population starting from `rho0`.
///
/// Follows Hamiltonian couplings both ways, jump operators forward only
/// (they cannot repopulate their source), and `L^+ L` recoil terms.  High
/// excitation states that the drive cannot reach stay out of the blocks,
/// which keeps the diagonalizations small even on generous truncations.
fn reachable_set(rho0: &DensityMatrix, m: &ModelOperators) -> Vec<bool> {
    let dim = m.space.dim();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); dim];
    let h = m.h_total();
    for &(r, c, _) in &h.entries {
        adj[r as usize].push(c as usize);
        adj[c as usize].push(r as usize);
    }
    for (_, l) in &m.lindblads {
        for &(r, c, _) in &l.entries {
            adj[c as usize].push(r as usize);
        }
        let ldl = l.adjoint().matmul(l);
        for &(r, c, _) in &ldl.entries {
            adj[r as usize].push(c as usize);
            adj[c as usize].push(r as usize);
        }
    }
    let mut reach = vec![false; dim];
    let mut stack = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            if rho0.data[(i, j)].norm() > 1e-16 {
                for k in [i, j] {
                    if !reach[k] {
                        reach[k] = true;
                        stack.push(k);
                    }
                }
            }
        }
    }
    while let Some(i) = stack.pop() {
        for &j in &adj[i] {
            if !reach[j] {
                reach[j] = true;
                stack.push(j);
            }
        }
    }
    reach
}

impl SpectralPropagator {
    /// Prepare the propagator for an initial state.
    pub fn new(rho0: &DensityMatrix, m: &ModelOperators) -> Result<Self, SimError> {
        let dim = m.space.dim();
        let comp = connected_components(m);
        let reach = reachable_set(rho0, m);
        let mut roots: Vec<usize> = comp.clone();
        roots.sort_unstable();
        roots.dedup();
        let members: Vec<Vec<usize>> = roots
            .iter()
            .map(|&r| (0..dim).filter(|&i| comp[i] == r && reach[i]).collect())
            .filter(|v: &Vec<usize>| !v.is_empty())
            .collect();

        let i_unit = C64::new(0.0, 1.0);
        let h_nh = {
            let mut h = m.h_total().to_dense();
            for (_, l) in &m.lindblads {
                let ldl = l.adjoint().matmul(l).to_dense();
                h.zip_mut_with(&ldl, |a, &b| *a -= C64::new(0.0, 0.5) * b);
            }
            h
        };
        let l_dense: Vec<Array2<C64>> = m.lindblads.iter().map(|(_, l)| l.to_dense()).collect();

        let mut blocks = Vec::new();
        for mi in &members {
            for mj in &members {
                let ni = mi.len();
                let nj = mj.len();
                let mut v0 = Array1::zeros(ni * nj);
                let mut has = false;
                for (a, &i) in mi.iter().enumerate() {
                    for (b, &j) in mj.iter().enumerate() {
                        let v = rho0.data[(i, j)];
                        if v.norm() > 1e-16 {
                            has = true;
                        }
                        v0[a * nj + b] = v;
                    }
                }
                if !has {
                    continue;
                }
                // vectorized generator: rho_dot = -i(A rho - rho B^+) + sum L_i rho L_j^+
                let mut gen: Array2<C64> = Array2::zeros((ni * nj, ni * nj));
                for (a, &i) in mi.iter().enumerate() {
                    for (ap, &ip) in mi.iter().enumerate() {
                        let v = -i_unit * h_nh[(i, ip)];
                        if v.norm() > 0.0 {
                            for b in 0..nj {
                                gen[(a * nj + b, ap * nj + b)] += v;
                            }
                        }
                    }
                }
                for (b, &j) in mj.iter().enumerate() {
                    for (bp, &jp) in mj.iter().enumerate() {
                        let v = i_unit * h_nh[(jp, j)].conj();
                        if v.norm() > 0.0 {
                            for a in 0..ni {
                                gen[(a * nj + b, a * nj + bp)] += v;
                            }
                        }
                    }
                }
                for ld in &l_dense {
                    for (a, &i) in mi.iter().enumerate() {
                        for (ap, &ip) in mi.iter().enumerate() {
                            let li = ld[(i, ip)];
                            if li.norm() == 0.0 {
                                continue;
                            }
                            for (b, &j) in mj.iter().enumerate() {
                                for (bp, &jp) in mj.iter().enumerate() {
                                    let lj = ld[(j, jp)].conj();
                                    if lj.norm() > 0.0 {
                                        gen[(a * nj + b, ap * nj + bp)] += li * lj;
                                    }
                                }
                            }
                        }
                    }
                }
                let (eigvals, eigvecs) = gen.eig()?;
                let y0 = eigvecs.solve(&v0)?;
                blocks.push(SpectralBlock {
                    rows: mi.clone(),
                    cols: mj.clone(),
                    eigvals,
                    eigvecs,
                    y0,
                });
            }
        }
        Ok(SpectralPropagator {
            space: rho0.space.clone(),
            dim,
            blocks,
        })
    }

    /// Density matrix at time `t`.
    pub fn eval(&self, t: f64) -> Result<DensityMatrix, SimError> {
        let mut out = Array2::zeros((self.dim, self.dim));
        for blk in &self.blocks {
            let nj = blk.cols.len();
            let phases: Array1<C64> = blk
                .eigvals
                .iter()
                .zip(&blk.y0)
                .map(|(&w, &y)| (w * t).exp() * y)
                .collect();
            let v = blk.eigvecs.dot(&phases);
            for (a, &i) in blk.rows.iter().enumerate() {
                for (b, &j) in blk.cols.iter().enumerate() {
                    out[(i, j)] += v[a * nj + b];
                }
            }
        }
        // the (I,J) and (J,I) blocks are exact adjoints analytically; remove
        // the eigensolver's asymmetry noise
        let adj = out.t().mapv(|v: C64| v.conj());
        out.zip_mut_with(&adj, |a, &b| *a = 0.5 * (*a + b));
        DensityMatrix::new(self.space.clone(), out)
    }

    /// Number of diagonalized component-pair blocks.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }
}

/// Full-model evolution via [`SpectralPropagator`], sampled like [`evolve`].
pub fn evolve_spectral(
    rho0: &DensityMatrix,
    m: &ModelOperators,
    t_final: f64,
    n_samples: usize,
) -> Result<EvolutionResult, SimError> {
    let prop = SpectralPropagator::new(rho0, m)?;
    let sample_times: Vec<f64> = if n_samples < 2 {
        vec![t_final]
    } else {
        (0..n_samples)
            .map(|k| t_final * k as f64 / (n_samples - 1) as f64)
            .collect()
    };
    let mut traces = Vec::with_capacity(sample_times.len());
    for &t in &sample_times {
        traces.push(herald_probability(&prop.eval(t)?));
    }
    Ok(EvolutionResult {
        rho_final: prop.eval(t_final)?,
        times: sample_times,
        herald_prob_trace: traces,
        steps: prop.block_count(),
        max_step_error: 0.0,
    })
}

/// Closed-form ground-manifold propagation.
///
/// Takes a two-qubit state over the computational basis
/// `{|00>, |01>, |10>, |11>}` mapped to sectors `(m, n)` and returns the
/// unnormalized heralded state and the herald probability
/// `P(t) = sum_s exp(-Gamma_s t) rho_ss(0)`.
pub fn evolve_effective(
    rho_qubit0: &Array2<C64>,
    eff: &EffectiveModel,
    t: f64,
) -> (Array2<C64>, f64) {
    let sectors = [(0u8, 0u8), (0, 1), (1, 0), (1, 1)];
    let mut out = Array2::zeros((4, 4));
    let mut p = 0.0;
    for (a, &sa) in sectors.iter().enumerate() {
        let ra = eff.sector(sa);
        p += (-ra.gamma * t).exp() * rho_qubit0[(a, a)].re;
        for (b, &sb) in sectors.iter().enumerate() {
            let rb = eff.sector(sb);
            let exponent = C64::new(0.0, -(ra.delta - rb.delta)) + ra.r_g * rb.r_g.conj()
                - C64::new(
                    0.5 * (ra.r_g.norm_sqr() + rb.r_g.norm_sqr()) + 0.5 * (ra.gamma + rb.gamma),
                    0.0,
                );
            out[(a, b)] = rho_qubit0[(a, b)] * (exponent * t).exp();
        }
    }
    (out, p)
}

/// Herald the auxiliary atom in `|g>`, trace out the cavities, and reduce to
/// the computational two-qubit subspace.
///
/// Returns `(rho_qubit, P, leakage)`: the conditional two-qubit state
/// normalized by the herald probability `P`, so heralded-branch population
/// left in the non-computational atom levels (reported as `leakage
/// = 1 - tr rho_qubit`) implicitly counts against fidelity.
pub fn herald_and_reduce(rho: &DensityMatrix) -> Result<(Array2<C64>, f64, f64), SimError> {
    let space = &rho.space;
    let aux = space
        .slot_named("aux")
        .ok_or_else(|| SimError::InvalidSpace("no aux slot".into()))?;
    let g = space.slots[aux].level_index("g").unwrap();
    let q_slots: Vec<usize> = space
        .slots
        .iter()
        .enumerate()
        .filter(|(_, s)| s.name().starts_with('q'))
        .map(|(i, _)| i)
        .collect();
    let lv0 = space.slots[q_slots[0]].level_index("0").unwrap();
    let lv1 = space.slots[q_slots[0]].level_index("1").unwrap();

    let p = herald_probability(rho);
    if p < HERALD_EPS {
        return Err(SimError::HeraldImpossible { prob: p });
    }

    let qidx = |s: &[u8]| -> Option<usize> {
        let a = s[q_slots[0]];
        let b = s[q_slots[1]];
        let ai = if a == lv0 {
            0
        } else if a == lv1 {
            1
        } else {
            return None;
        };
        let bi = if b == lv0 {
            0
        } else if b == lv1 {
            1
        } else {
            return None;
        };
        Some(ai * 2 + bi)
    };

    let dim = space.dim();
    let mut out: Array2<C64> = Array2::zeros((4, 4));
    for i in 0..dim {
        let si = space.state(i);
        if si[aux] != g {
            continue;
        }
        let qi = match qidx(si) {
            Some(q) => q,
            None => continue,
        };
        for j in 0..dim {
            let sj = space.state(j);
            if sj[aux] != g {
                continue;
            }
            // trace over cavities: environment indices must match
            if (0..space.slots.len())
                .filter(|&k| k != q_slots[0] && k != q_slots[1] && k != aux)
                .any(|k| si[k] != sj[k])
            {
                continue;
            }
            if let Some(qj) = qidx(sj) {
                out[(qi, qj)] += rho.data[(i, j)];
            }
        }
    }
    out.mapv_inplace(|v| v / p);
    let mut leakage = 1.0 - out.diag().iter().map(|v| v.re).sum::<f64>();
    if leakage.abs() < 1e-13 {
        leakage = 0.0;
    }
    Ok((out, p, leakage))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_space, transition, Slot};
    use crate::model::{ModelVariant, PhysicalParams};
    use ndarray::array;
    use std::sync::Arc;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    /// Driven, decaying two-level atom plus a lossy cavity.
    fn toy_model() -> ModelOperators {
        let space = build_space(
            vec![Slot::atom("q1", &["1", "e"]), Slot::mode("cav", 2)],
            None,
        )
        .unwrap();
        let sp = transition(&space, 0, "e", "1").unwrap();
        let a = crate::hilbert::annihilator(&space, 1).unwrap();
        let coupling = sp.matmul(&a).scale(c(0.7));
        let h_e = coupling.add(&coupling.adjoint());
        let v = transition(&space, 0, "e", "1").unwrap().scale(c(0.05));
        let lindblads = vec![
            ("L_q".to_string(), sp.adjoint().scale(c(0.3f64.sqrt()))),
            ("L_c".to_string(), a.scale(c(0.9f64.sqrt()))),
        ];
        ModelOperators {
            space,
            h_e,
            v,
            lindblads,
            variant: ModelVariant::Nonlocal3Cav,
            params: PhysicalParams::from_caption(100.0, 10.0, 100.0, false),
        }
    }

    fn excited_cavity_state(m: &ModelOperators) -> DensityMatrix {
        let mut psi = vec![c(0.0); m.space.dim()];
        let i = m.space.find(&[0, 1]).unwrap();
        psi[i] = c(1.0);
        DensityMatrix::pure(m.space.clone(), &psi).unwrap()
    }

    #[test]
    fn adaptive_integrator_matches_spectral_propagation() {
        let m = toy_model();
        let rho0 = excited_cavity_state(&m);
        for t in [0.4, 2.0, 7.0] {
            let ode = evolve(&rho0, &m, t, 1e-11, 1).unwrap();
            let spec = evolve_spectral(&rho0, &m, t, 1).unwrap();
            let gap = ode
                .rho_final
                .data
                .iter()
                .zip(spec.rho_final.data.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0f64, f64::max);
            assert!(gap < 1e-8, "t = {t}: gap {gap:.2e}");
        }
    }

    #[test]
    fn pure_decay_follows_exponential_law() {
        let space = build_space(vec![Slot::atom("q1", &["1", "e"])], None).unwrap();
        let sm = transition(&space, 0, "1", "e").unwrap();
        let gamma = 0.8f64;
        let m = ModelOperators {
            space: space.clone(),
            h_e: Operator::zero(space.clone(), "H"),
            v: Operator::zero(space.clone(), "V"),
            lindblads: vec![("L".to_string(), sm.scale(c(gamma.sqrt())))],
            variant: ModelVariant::Nonlocal3Cav,
            params: PhysicalParams::from_caption(100.0, 10.0, 100.0, false),
        };
        let psi = [c(0.0), c(1.0)];
        let rho0 = DensityMatrix::pure(space, &psi).unwrap();
        let t = 1.7;
        for rho in [
            evolve(&rho0, &m, t, 1e-12, 1).unwrap().rho_final,
            evolve_spectral(&rho0, &m, t, 1).unwrap().rho_final,
        ] {
            assert!((rho.data[(1, 1)].re - (-gamma * t).exp()).abs() < 1e-10);
            assert!((rho.data[(0, 0)].re - (1.0 - (-gamma * t).exp())).abs() < 1e-10);
        }
    }

    #[test]
    fn trace_is_preserved_by_both_propagators() {
        let m = toy_model();
        let rho0 = excited_cavity_state(&m);
        let ode = evolve(&rho0, &m, 5.0, 1e-10, 3).unwrap();
        let spec = evolve_spectral(&rho0, &m, 5.0, 3).unwrap();
        assert!((ode.rho_final.trace().re - 1.0).abs() < 1e-9);
        assert!((spec.rho_final.trace().re - 1.0).abs() < 1e-9);
        assert!(ode.rho_final.max_hermiticity_violation() < 1e-10);
        assert!(spec.rho_final.max_hermiticity_violation() < 1e-12);
    }

    #[test]
    fn integrator_reports_underflow_instead_of_looping() {
        let m = toy_model();
        let rho0 = excited_cavity_state(&m);
        assert!(matches!(
            evolve(&rho0, &m, 1.0, -1.0, 1),
            Err(SimError::IntegratorFailure(_))
        ));
    }

    #[test]
    fn effective_propagation_identity_at_zero_time() {
        let p = PhysicalParams::from_caption(600.0, 10.0, 180.0, false);
        let p = crate::effective::tune_detunings_nonlocal(&p).unwrap().0;
        let eff = crate::effective::numeric_model_for(&p, ModelVariant::Nonlocal3Cav, 1, Some(1))
            .unwrap();
        let rho0 = array![
            [c(0.4), c(0.1), c(0.0), c(0.0)],
            [c(0.1), c(0.3), c(0.0), c(0.0)],
            [c(0.0), c(0.0), c(0.2), c(0.0)],
            [c(0.0), c(0.0), c(0.0), c(0.1)]
        ];
        let (out, p_h) = evolve_effective(&rho0, &eff, 0.0);
        assert!((p_h - 1.0).abs() < 1e-12);
        let gap = out
            .iter()
            .zip(rho0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(gap < 1e-14);
    }

    #[test]
    fn herald_trace_reads_auxiliary_ground_population() {
        let space = build_space(
            vec![
                Slot::atom("q1", &["0", "1"]),
                Slot::atom("aux", &["g", "f"]),
            ],
            None,
        )
        .unwrap();
        let mut data = Array2::zeros((4, 4));
        // |0,g>: 0.35, |1,f>: 0.65
        data[(0, 0)] = c(0.35);
        data[(3, 3)] = c(0.65);
        let rho = DensityMatrix::new(Arc::clone(&space), data).unwrap();
        assert!((herald_probability(&rho) - 0.35).abs() < 1e-14);
    }
}

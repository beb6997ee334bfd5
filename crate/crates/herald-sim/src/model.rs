//! Physical parameters and model construction.
//!
//! Builds the rotating-frame Hamiltonians and collapse operators for two
//! setups: two qubit atoms in the outer cavities of a three-cavity chain
//! (nonlocal gate), and two qubit atoms sharing one cavity of a two-cavity
//! pair (local gate on a decoherence-free-subspace pair). Both couple to one
//! driven auxiliary atom.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::hilbert::{
    annihilator, build_space, product_embed, transition, HilbertSpace, Operator, Slot,
};
use crate::C64;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// All rates, couplings, detunings, and drive amplitudes of the composite
/// system. Rates are stored in units of `gamma` by convention, but any
/// consistent unit works.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Qubit-atom / cavity coupling.
    pub g: f64,
    /// Auxiliary-atom / cavity coupling.
    pub g_f: f64,
    /// Inter-cavity coupling A-B (zero selects the two-cavity setup).
    pub j_1: f64,
    /// Inter-cavity coupling B-C.
    pub j_2: f64,
    /// Cavity decay, common to all cavities.
    pub kappa: f64,
    /// Qubit-atom excited-state decay.
    pub gamma: f64,
    /// Auxiliary decay E2 -> g.
    pub gamma_g: f64,
    /// Auxiliary decay E1 -> f.
    pub gamma_f: f64,
    /// Classical Rabi frequency on g <-> E2.
    pub omega: f64,
    /// Classical Rabi frequency on E2 <-> E1.
    pub omega_m: f64,
    /// Qubit-atom excited detuning.
    pub delta_e: f64,
    /// Auxiliary E1 detuning.
    pub delta_e1: f64,
    /// Auxiliary E2 detuning.
    pub delta_e2: f64,
    /// Cooperativity ratio C_f = alpha * C.
    #[serde(default = "one")]
    pub alpha: f64,
    /// Decay ratio gamma_f = beta * gamma.
    #[serde(default = "one")]
    pub beta: f64,
    /// Model the auxiliary laser that cancels the drive-induced shift of |g>.
    #[serde(default = "yes")]
    pub stark_compensation: bool,
    /// Fiber length in meters (optional; informational).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_fc: Option<f64>,
    /// Single-pass fiber loss fraction (optional; informational).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_l: Option<f64>,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

impl PhysicalParams {
    /// Validate positivity and range constraints.
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.kappa > 0.0 && self.gamma > 0.0 && self.g > 0.0 && self.g_f > 0.0) {
            return Err(SimError::InvalidParams(
                "kappa, gamma, g, g_f must be positive".into(),
            ));
        }
        if self.gamma_g < 0.0 || self.gamma_f < 0.0 {
            return Err(SimError::InvalidParams(
                "gamma_g, gamma_f must be >= 0".into(),
            ));
        }
        if self.omega < 0.0 || self.omega_m < 0.0 {
            return Err(SimError::InvalidParams(
                "omega, omega_m must be >= 0".into(),
            ));
        }
        if let Some(al) = self.alpha_l {
            if !(0.0..1.0).contains(&al) {
                return Err(SimError::InvalidParams("alpha_l must be in [0, 1)".into()));
            }
        }
        for (name, v) in [
            ("delta_e", self.delta_e),
            ("delta_e1", self.delta_e1),
            ("delta_e2", self.delta_e2),
        ] {
            if !v.is_finite() {
                return Err(SimError::InvalidParams(format!("{name} not finite")));
            }
        }
        Ok(())
    }

    /// Build parameters from the figure parameterization: cooperativity `C`,
    /// coupling ratio `lambda = J/(kappa sqrt(C))`, and `Delta_E2/gamma`, with
    /// `kappa = 10 gamma`, `Omega = Delta_E2/(6 C^{1/4})`,
    /// `Omega_m = 4 gamma C^{1/4}`, `gamma_g = gamma`, `gamma_f = beta gamma`.
    /// Detunings `delta_e`/`delta_e1` start at zero and are set by tuning.
    pub fn from_caption(
        cooperativity: f64,
        lambda: f64,
        delta_e2_over_gamma: f64,
        dfs: bool,
    ) -> PhysicalParams {
        let gamma = 1.0;
        let kappa = 10.0 * gamma;
        let alpha = 1.0;
        let beta = 1.0;
        let g = (cooperativity * kappa * gamma).sqrt();
        let g_f = (alpha * cooperativity * kappa * gamma).sqrt();
        let j = lambda * kappa * cooperativity.sqrt();
        let delta_e2 = delta_e2_over_gamma * gamma;
        PhysicalParams {
            g,
            g_f,
            j_1: if dfs { 0.0 } else { j },
            j_2: j,
            kappa,
            gamma,
            gamma_g: gamma,
            gamma_f: beta * gamma,
            omega: delta_e2 / (6.0 * cooperativity.powf(0.25)),
            omega_m: 4.0 * gamma * cooperativity.powf(0.25),
            delta_e: 0.0,
            delta_e1: 0.0,
            delta_e2,
            alpha,
            beta,
            stark_compensation: true,
            l_fc: None,
            alpha_l: None,
        }
    }

    /// Effective two-photon Rabi frequency through the eliminated E2 level.
    pub fn omega_tilde(&self) -> f64 {
        self.omega * self.omega_m / (2.0 * self.delta_e2)
    }

    /// The inter-cavity coupling of the active setup.
    pub fn j(&self) -> f64 {
        if self.j_1 == 0.0 {
            self.j_2
        } else {
            self.j_1
        }
    }
}

/// Dimensionless combinations derived from [`PhysicalParams`].
#[derive(Debug, Clone, Serialize)]
pub struct ReducedParams {
    pub cooperativity: f64,
    pub cooperativity_f: f64,
    pub big_g: f64,
    pub lambda: f64,
    pub gbar: f64,
    pub d: f64,
    pub d_1: f64,
    pub d_ratio: f64,
    pub omega_tilde: f64,
    pub gamma_g_tilde: f64,
    pub omega_m_tilde: f64,
    pub j_tilde_1: C64,
    pub j_tilde_2: C64,
    pub delta_e_tilde: C64,
    pub delta_e1_tilde: C64,
    pub delta_e2_tilde: C64,
    /// Rotating-frame normal-mode energies (c1, c2, c3).
    pub mode_freqs: [f64; 3],
}

impl ReducedParams {
    pub fn from(p: &PhysicalParams) -> ReducedParams {
        let j = p.j();
        let coop = p.g * p.g / (p.kappa * p.gamma);
        let coop_f = p.g_f * p.g_f / (p.kappa * p.gamma);
        let big_g = j / p.kappa;
        let gbar = 1.0 / big_g;
        let alpha_c = p.alpha * coop;
        let d = (p.beta / alpha_c).sqrt();
        let d_1 = ((gbar * gbar + p.beta / alpha_c) / 2.0).sqrt();
        ReducedParams {
            cooperativity: coop,
            cooperativity_f: coop_f,
            big_g,
            lambda: j / (p.kappa * coop.sqrt()),
            gbar,
            d,
            d_1,
            d_ratio: (p.beta / p.alpha).sqrt(),
            omega_tilde: p.omega_tilde(),
            gamma_g_tilde: p.gamma_g * p.omega_m * p.omega_m
                / ((2.0 * p.delta_e2) * (2.0 * p.delta_e2)),
            omega_m_tilde: p.omega_m / p.gamma,
            j_tilde_1: C64::new(2.0 * SQRT_2 * j / p.kappa, -0.5),
            j_tilde_2: C64::new(SQRT_2 * j / p.kappa, -0.5),
            delta_e_tilde: C64::new(p.delta_e / p.gamma, -0.5),
            delta_e1_tilde: C64::new(p.delta_e1 / p.gamma, -0.5 * p.gamma_f / p.gamma),
            delta_e2_tilde: C64::new(p.delta_e2 / p.gamma, -0.5 * p.gamma_g / p.gamma),
            mode_freqs: [0.0, 2.0 * SQRT_2 * j, SQRT_2 * j],
        }
    }
}

/// Which physical setup a [`ModelOperators`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelVariant {
    /// Three cavities in a chain, one qubit atom in each outer cavity.
    Nonlocal3Cav,
    /// Two cavities, both qubit atoms in one cavity.
    DFS2Cav,
    /// Auxiliary E2 level adiabatically eliminated.
    EliminatedE2,
}

/// Hamiltonian partition and collapse operators for one setup.
pub struct ModelOperators {
    pub space: Arc<HilbertSpace>,
    /// Excited-manifold Hamiltonian (drive excluded).
    pub h_e: Operator,
    /// Drive coupling ground -> excited manifold.
    pub v: Operator,
    /// Labeled collapse operators with rates folded in as amplitudes.
    pub lindblads: Vec<(String, Operator)>,
    pub variant: ModelVariant,
    pub params: PhysicalParams,
}

impl ModelOperators {
    /// `H_e + V + V^+`.
    pub fn h_total(&self) -> Operator {
        self.h_e.add(&self.v).add(&self.v.adjoint())
    }

    pub fn lindblad(&self, label: &str) -> Option<&Operator> {
        self.lindblads
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, op)| op)
    }
}

/// Normal-mode lowering operators for the given variant.
///
/// Three-cavity chain: `c1 = (aA - sqrt2 aB + aC)/2`,
/// `c2 = (aA + sqrt2 aB + aC)/2`, `c3 = (aA - aC)/sqrt2`.
/// Two-cavity pair: `a± = (aB ± aC)/sqrt2`.
pub fn normal_modes(
    space: &Arc<HilbertSpace>,
    variant: ModelVariant,
) -> Result<Vec<Operator>, SimError> {
    let mode_slots: Vec<usize> = space
        .slots
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_mode())
        .map(|(i, _)| i)
        .collect();
    let want = match variant {
        ModelVariant::DFS2Cav => 2,
        _ => 3,
    };
    if mode_slots.len() != want {
        return Err(SimError::InvalidSpace(format!(
            "expected {want} mode slots, found {}",
            mode_slots.len()
        )));
    }
    let anns: Vec<Operator> = mode_slots
        .iter()
        .map(|&i| annihilator(space, i))
        .collect::<Result<_, _>>()?;
    let combos: Vec<(&str, Vec<f64>)> = match variant {
        ModelVariant::DFS2Cav => vec![
            ("c+", vec![1.0 / SQRT_2, 1.0 / SQRT_2]),
            ("c-", vec![1.0 / SQRT_2, -1.0 / SQRT_2]),
        ],
        _ => vec![
            ("c1", vec![0.5, -SQRT_2 / 2.0, 0.5]),
            ("c2", vec![0.5, SQRT_2 / 2.0, 0.5]),
            ("c3", vec![1.0 / SQRT_2, 0.0, -1.0 / SQRT_2]),
        ],
    };
    Ok(combos
        .into_iter()
        .map(|(label, coefs)| {
            let mut op = Operator::zero(space.clone(), label);
            for (a, w) in anns.iter().zip(&coefs) {
                if *w != 0.0 {
                    op = op.add(&a.scale(c(*w)));
                }
            }
            op.label = label.to_string();
            op
        })
        .collect())
}

const QUBIT_LEVELS: [&str; 4] = ["0", "1", "e", "d"];
const AUX_LEVELS: [&str; 4] = ["g", "f", "E1", "E2"];

fn qubit_slot(name: &str) -> Slot {
    Slot::atom(name, &QUBIT_LEVELS)
}

fn aux_slot() -> Slot {
    Slot::atom("aux", &AUX_LEVELS)
}

/// Local matrix of an atomic transition `|upper><lower|`.
fn local_transition(levels: &[&str], upper: &str, lower: &str) -> Array2<C64> {
    let d = levels.len();
    let mut m = Array2::zeros((d, d));
    let up = levels.iter().position(|&l| l == upper).unwrap();
    let lo = levels.iter().position(|&l| l == lower).unwrap();
    m[(up, lo)] = c(1.0);
    m
}

/// Local number operator of a mode slot.
fn local_number(n_max: u32) -> Array2<C64> {
    let d = n_max as usize + 1;
    let mut m = Array2::zeros((d, d));
    for n in 0..d {
        m[(n, n)] = c(n as f64);
    }
    m
}

/// Local annihilation matrix of a mode slot.
fn local_ann(n_max: u32) -> Array2<C64> {
    let d = n_max as usize + 1;
    let mut m = Array2::zeros((d, d));
    for n in 1..d {
        m[(n - 1, n)] = c((n as f64).sqrt());
    }
    m
}

struct Builder {
    space: Arc<HilbertSpace>,
    h: Operator,
}

impl Builder {
    fn new(space: Arc<HilbertSpace>) -> Self {
        let h = Operator::zero(space.clone(), "H_e");
        Builder { space, h }
    }

    fn add_term(&mut self, w: f64, factors: &[(usize, &Array2<C64>)]) -> Result<(), SimError> {
        if w == 0.0 {
            return Ok(());
        }
        let op = product_embed(factors, &self.space)?;
        self.h = self.h.add(&op.scale(c(w)));
        Ok(())
    }

    /// Add `w * O + w * O^+` built from the given factors.
    fn add_hc(&mut self, w: f64, factors: &[(usize, &Array2<C64>)]) -> Result<(), SimError> {
        if w == 0.0 {
            return Ok(());
        }
        let op = product_embed(factors, &self.space)?;
        self.h = self.h.add(&op.scale(c(w))).add(&op.adjoint().scale(c(w)));
        Ok(())
    }
}

/// Shared construction for both cavity layouts.
///
/// `mode_matrix` is the Hermitian single-particle matrix `h_ij` of the
/// rotating-frame photon energy `sum_ij h_ij a_i^+ a_j` over the mode slots;
/// `qubit_couplings` lists `(qubit slot, mode slot, strength)` for
/// `strength * a |e><1| + h.c.`; the auxiliary couples to `aux_mode` with
/// strength `g_f`.
#[allow(clippy::too_many_arguments)]
fn build_model(
    p: &PhysicalParams,
    variant: ModelVariant,
    slots: Vec<Slot>,
    cap: Option<u32>,
    mode_matrix: &Array2<f64>,
    qubit_couplings: &[(usize, usize, f64)],
    aux_mode: usize,
    mode_slot0: usize,
) -> Result<ModelOperators, SimError> {
    p.validate()?;
    let space = build_space(slots, cap)?;
    let aux = space.slot_named("aux").unwrap();
    let mut b = Builder::new(space.clone());

    let p_e1 = local_transition(&AUX_LEVELS, "E1", "E1");
    let p_e2 = local_transition(&AUX_LEVELS, "E2", "E2");
    let p_g = local_transition(&AUX_LEVELS, "g", "g");
    let m_e1e2 = local_transition(&AUX_LEVELS, "E1", "E2");
    let ef = local_transition(&AUX_LEVELS, "E1", "f");
    let pe_q = local_transition(&QUBIT_LEVELS, "e", "e");
    let e1_q = local_transition(&QUBIT_LEVELS, "e", "1");

    b.add_term(p.delta_e1, &[(aux, &p_e1)])?;
    b.add_term(p.delta_e2, &[(aux, &p_e2)])?;
    b.add_hc(p.omega_m / 2.0, &[(aux, &m_e1e2)])?;
    if p.stark_compensation {
        // cancels the drive-induced second-order shift of |g>
        b.add_term(p.omega * p.omega / (4.0 * p.delta_e2), &[(aux, &p_g)])?;
    }

    // photon energies in the chosen rotating frame
    let n_modes = mode_matrix.nrows();
    for i in 0..n_modes {
        let si = mode_slot0 + i;
        let n_max_i = match &space.slots[si] {
            Slot::Mode { n_max, .. } => *n_max,
            _ => unreachable!(),
        };
        b.add_term(mode_matrix[(i, i)], &[(si, &local_number(n_max_i))])?;
        for j in 0..n_modes {
            if i == j || mode_matrix[(i, j)] == 0.0 {
                continue;
            }
            let sj = mode_slot0 + j;
            let n_max_j = match &space.slots[sj] {
                Slot::Mode { n_max, .. } => *n_max,
                _ => unreachable!(),
            };
            let adag = local_ann(n_max_i).t().mapv(|v| v.conj());
            let a_j = local_ann(n_max_j);
            b.add_term(mode_matrix[(i, j)], &[(si, &adag), (sj, &a_j)])?;
        }
    }

    // atom-photon couplings; photon lowering and atomic raising in one factor
    // list so cap truncation cannot cut the excitation-conserving path
    for &(q, m, strength) in qubit_couplings {
        let n_max = match &space.slots[m] {
            Slot::Mode { n_max, .. } => *n_max,
            _ => unreachable!(),
        };
        b.add_hc(strength, &[(q, &e1_q), (m, &local_ann(n_max))])?;
        b.add_term(p.delta_e, &[(q, &pe_q)])?;
    }
    let n_max_aux = match &space.slots[aux_mode] {
        Slot::Mode { n_max, .. } => *n_max,
        _ => unreachable!(),
    };
    b.add_hc(p.g_f, &[(aux, &ef), (aux_mode, &local_ann(n_max_aux))])?;

    let v = transition(&space, aux, "E2", "g")?.scale(c(p.omega / 2.0));
    let mut v = v;
    v.label = "V".to_string();

    let modes = normal_modes(
        &space,
        if variant == ModelVariant::DFS2Cav {
            ModelVariant::DFS2Cav
        } else {
            ModelVariant::Nonlocal3Cav
        },
    )?;
    let mut lindblads: Vec<(String, Operator)> = modes
        .into_iter()
        .map(|op| {
            let label = format!("L_{}", op.label);
            (label, op.scale(c(p.kappa.sqrt())))
        })
        .collect();
    lindblads.push((
        "L_f".into(),
        transition(&space, aux, "f", "E1")?.scale(c(p.gamma_f.sqrt())),
    ));
    lindblads.push((
        "L_g".into(),
        transition(&space, aux, "g", "E2")?.scale(c(p.gamma_g.sqrt())),
    ));
    for (k, &(q, _, _)) in qubit_couplings.iter().enumerate() {
        lindblads.push((
            format!("L_{}", k + 1),
            transition(&space, q, "d", "e")?.scale(c(p.gamma.sqrt())),
        ));
    }

    Ok(ModelOperators {
        space,
        h_e: b.h,
        v,
        lindblads,
        variant,
        params: p.clone(),
    })
}

/// Three-cavity nonlocal setup: qubit atoms in cavities A and C, auxiliary in
/// B, drive frequency chosen so the lowest normal mode is resonant.
///
/// In the physical-cavity basis the couplings are local (`g aA |e>_1<1|`,
/// `g aC |e>_2<1|`, `g_f aB |E1><f|`) and the frame energies become the
/// single-particle matrix `U^T diag(0, 2 sqrt2 J, sqrt2 J) U` over
/// `(aA, aB, aC)`.
pub fn build_nonlocal_model(
    p: &PhysicalParams,
    n_max: u32,
    excitation_cap: Option<u32>,
) -> Result<ModelOperators, SimError> {
    if p.j_1 != p.j_2 || p.j_1 <= 0.0 {
        return Err(SimError::InvalidParams(
            "nonlocal setup requires j_1 = j_2 > 0".into(),
        ));
    }
    let j = p.j_1;
    let u = [
        [0.5, -SQRT_2 / 2.0, 0.5],
        [0.5, SQRT_2 / 2.0, 0.5],
        [1.0 / SQRT_2, 0.0, -1.0 / SQRT_2],
    ];
    let freqs = [0.0, 2.0 * SQRT_2 * j, SQRT_2 * j];
    let mut h = Array2::zeros((3, 3));
    for i in 0..3 {
        for k in 0..3 {
            let mut v = 0.0;
            for l in 0..3 {
                v += freqs[l] * u[l][i] * u[l][k];
            }
            h[(i, k)] = v;
        }
    }
    let slots = vec![
        qubit_slot("q1"),
        qubit_slot("q2"),
        aux_slot(),
        Slot::mode("cavA", n_max),
        Slot::mode("cavB", n_max),
        Slot::mode("cavC", n_max),
    ];
    build_model(
        p,
        ModelVariant::Nonlocal3Cav,
        slots,
        excitation_cap,
        &h,
        &[(0, 3, p.g), (1, 5, p.g)],
        4,
        3,
    )
}

/// Two-cavity setup: both qubit atoms in cavity C, auxiliary in B. The
/// symmetric mode `a+` sits at `2J`, the antisymmetric mode is resonant, so
/// the frame photon matrix over `(aB, aC)` is `J [[1,1],[1,1]]`.
pub fn build_dfs_model(
    p: &PhysicalParams,
    n_max: u32,
    excitation_cap: Option<u32>,
) -> Result<ModelOperators, SimError> {
    if p.j_1 != 0.0 || p.j_2 <= 0.0 {
        return Err(SimError::InvalidParams(
            "two-cavity setup requires j_1 = 0 and j_2 > 0".into(),
        ));
    }
    let j = p.j_2;
    let mut h = Array2::zeros((2, 2));
    h[(0, 0)] = j;
    h[(0, 1)] = j;
    h[(1, 0)] = j;
    h[(1, 1)] = j;
    let slots = vec![
        qubit_slot("q3"),
        qubit_slot("q4"),
        aux_slot(),
        Slot::mode("cavB", n_max),
        Slot::mode("cavC", n_max),
    ];
    build_model(
        p,
        ModelVariant::DFS2Cav,
        slots,
        excitation_cap,
        &h,
        &[(0, 4, p.g), (1, 4, p.g)],
        3,
        3,
    )
}

/// Adiabatically eliminate the auxiliary E2 level.
///
/// The E1 level shifts by `-Omega_m^2/(4 Delta_E2)`, the drive becomes
/// `-Omega_tilde |E1><g|`, and the E2 terms (Raman coupling, detuning, decay
/// to g, and the compensation shift it balances) drop out.
pub fn eliminate_e2(m: &ModelOperators) -> Result<ModelOperators, SimError> {
    if m.variant == ModelVariant::EliminatedE2 {
        return Err(SimError::InvalidParams("model already eliminated".into()));
    }
    let p = &m.params;
    if p.delta_e2 == 0.0 {
        return Err(SimError::InvalidParams("delta_e2 = 0".into()));
    }
    let space = m.space.clone();
    let aux = space.slot_named("aux").unwrap();

    let p_e1 = transition(&space, aux, "E1", "E1")?;
    let p_e2 = transition(&space, aux, "E2", "E2")?;
    let m_e1e2 = transition(&space, aux, "E1", "E2")?;
    let p_g = transition(&space, aux, "g", "g")?;

    let mut h_e = m.h_e.clone();
    h_e = h_e.add(&p_e2.scale(c(-p.delta_e2)));
    h_e = h_e.add(&m_e1e2.scale(c(-p.omega_m / 2.0)));
    h_e = h_e.add(&m_e1e2.adjoint().scale(c(-p.omega_m / 2.0)));
    if p.stark_compensation {
        h_e = h_e.add(&p_g.scale(c(-p.omega * p.omega / (4.0 * p.delta_e2))));
    }
    h_e = h_e.add(&p_e1.scale(c(-p.omega_m * p.omega_m / (4.0 * p.delta_e2))));
    h_e.label = "H_e'".to_string();

    let mut v = transition(&space, aux, "E1", "g")?.scale(c(-p.omega_tilde()));
    v.label = "V'".to_string();

    let lindblads = m
        .lindblads
        .iter()
        .filter(|(l, _)| l != "L_g")
        .map(|(l, op)| (l.clone(), op.clone()))
        .collect();

    Ok(ModelOperators {
        space,
        h_e,
        v,
        lindblads,
        variant: ModelVariant::EliminatedE2,
        params: p.clone(),
    })
}

/// Zero-energy dark state of the eliminated-E2 nonlocal model with both
/// qubits in `|0>`:
/// `(g_f |g, vac> - sqrt2 Omega_tilde |f, one photon in c1>) / norm`.
pub fn dark_state(p: &PhysicalParams, space: &Arc<HilbertSpace>) -> Result<Vec<C64>, SimError> {
    let aux = space
        .slot_named("aux")
        .ok_or_else(|| SimError::InvalidSpace("no aux slot".into()))?;
    let mode_slots: Vec<usize> = space
        .slots
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_mode())
        .map(|(i, _)| i)
        .collect();
    if mode_slots.len() != 3 {
        return Err(SimError::InvalidSpace(
            "dark state needs 3 mode slots".into(),
        ));
    }
    let g_lv = space.slots[aux].level_index("g").unwrap();
    let f_lv = space.slots[aux].level_index("f").unwrap();
    let omega_tilde = p.omega_tilde();
    let norm = (p.g_f * p.g_f + 2.0 * omega_tilde * omega_tilde).sqrt();

    let mut psi = vec![C64::new(0.0, 0.0); space.dim()];
    let mut multi = vec![0u8; space.slots.len()];
    // |0,0> qubits, aux g, vacuum
    multi[aux] = g_lv;
    let i0 = space
        .find(&multi)
        .ok_or_else(|| SimError::InvalidSpace("ground state not in basis".into()))?;
    psi[i0] = c(p.g_f / norm);

    // one photon in c1 = (aA - sqrt2 aB + aC)/2, aux f
    let c1_coefs = [0.5, -SQRT_2 / 2.0, 0.5];
    for (k, &m_slot) in mode_slots.iter().enumerate() {
        let mut mi = multi.clone();
        mi[aux] = f_lv;
        mi[m_slot] = 1;
        let i = space
            .find(&mi)
            .ok_or_else(|| SimError::InvalidSpace("photon state not in basis".into()))?;
        psi[i] = c(-SQRT_2 * omega_tilde * c1_coefs[k] / norm);
    }
    Ok(psi)
}

/// Intrinsic loss rate induced by fiber attenuation,
/// `kappa_fc = -c ln(1 - alpha_l) / (2 L_fc)`.
pub fn fiber_loss_rate(l_fc: f64, alpha_l: f64, c_fiber: f64) -> Result<f64, SimError> {
    if l_fc <= 0.0 {
        return Err(SimError::InvalidParams("l_fc must be positive".into()));
    }
    if !(0.0..1.0).contains(&alpha_l) {
        return Err(SimError::InvalidParams("alpha_l must be in [0, 1)".into()));
    }
    Ok(-c_fiber * (1.0 - alpha_l).ln() / (2.0 * l_fc))
}

//! Driven two-mode + two-level-atom cavity QED.
//!
//! Two degenerate counter-propagating whispering-gallery modes `a` (driven) and
//! `b`, coupled to each other by backscattering `h` and to a two-level atom by
//! the complex traveling-wave coupling `g_tw`. The linearized amplitude
//! equations are
//!
//! ```text
//! <a>' = -(kappa + i Dcp) <a> - i h <b> - i eps_p - i g* <sigma>
//! <b>' = -(kappa + i Dcp) <b> - i h <a> - i g <sigma>
//! <s>' = -(gamma + i Dap) <s> - i g <a> - i g* <b>
//! ```
//!
//! with closed-form steady states, and output fields
//! `{a_out, b_out} = -{a_in, b_in} + sqrt(2 kappa_ex) {a, b}`.
//! The truncated-Fock master-equation solver lives in [`fock`].

pub mod fock;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::numerics::cubic_roots;
use crate::{Error, Result};

/// All rates and detunings of the coupled system, angular frequencies in rad/us.
///
/// Detunings follow the rotating-frame convention `Delta_cp = omega_c - omega_p`
/// and `Delta_ap = omega_a - omega_p`; `Delta_ca = Delta_cp - Delta_ap`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CqedParams {
    pub delta_cp: f64,
    pub delta_ap: f64,
    /// Backscattering mode coupling (real by phase convention).
    pub h: f64,
    pub kappa_i: f64,
    pub kappa_ex: f64,
    /// Atomic field decay rate (half the population decay rate).
    pub gamma: f64,
    /// Drive amplitude; |eps_p|^2 = 2 kappa_ex P_in.
    pub eps_p: C64,
    /// Traveling-wave coupling at the atom position.
    pub g_tw: C64,
}

impl CqedParams {
    pub fn kappa(&self) -> f64 {
        self.kappa_i + self.kappa_ex
    }

    pub fn delta_ca(&self) -> f64 {
        self.delta_cp - self.delta_ap
    }

    /// Input photon flux P_in = |eps_p|^2 / (2 kappa_ex), counts/us.
    pub fn p_in(&self) -> f64 {
        self.eps_p.norm_sqr() / (2.0 * self.kappa_ex)
    }

    /// Drive amplitude that produces the given input flux (real by convention;
    /// the global drive phase cancels in every observable and force).
    pub fn eps_for_input_flux(p_in: f64, kappa_ex: f64) -> C64 {
        C64::new((2.0 * kappa_ex * p_in).sqrt(), 0.0)
    }

    /// Drift matrix M of the linearized equations, d/dt (a, b, s) = M (a, b, s) + c.
    pub fn drift_matrix(&self) -> Matrix3<C64> {
        let i = C64::i();
        let ka = -C64::new(self.kappa(), self.delta_cp);
        let ga = -C64::new(self.gamma, self.delta_ap);
        Matrix3::new(
            ka,
            -i * self.h,
            -i * self.g_tw.conj(),
            -i * self.h,
            ka,
            -i * self.g_tw,
            -i * self.g_tw,
            -i * self.g_tw.conj(),
            ga,
        )
    }

    /// Drive vector c.
    pub fn drive_vector(&self) -> Vector3<C64> {
        Vector3::new(-C64::i() * self.eps_p, C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    }
}

/// Steady-state amplitudes and the derived transmission/reflection.
#[derive(Debug, Clone, Copy)]
pub struct CqedState {
    pub a_ss: C64,
    pub b_ss: C64,
    pub sigma_ss: C64,
    /// Linearized excited-state population |<sigma>|^2.
    pub excited_population: f64,
    pub transmission: f64,
    pub reflection: f64,
    /// Set when the drive is zero and T, R are defined as 0 by convention.
    pub zero_input: bool,
}

/// Closed-form steady state of the linearized equations.
pub fn steady_state_linear(params: &CqedParams) -> Result<CqedState> {
    let i = C64::i();
    let g = params.g_tw;
    let ka = C64::new(params.kappa(), params.delta_cp);
    let ga = C64::new(params.gamma, params.delta_ap);
    let den1 = ka * ga + g.norm_sqr();
    let num_a = i * params.eps_p * ga * den1;
    let den = (i * params.h * ga + g.conj() * g.conj()) * (i * params.h * ga + g * g) - den1 * den1;
    let scale = ka.norm().max(ga.norm()).max(g.norm()).max(params.h.abs());
    if den.norm() <= 1e-14 * scale.powi(4).max(1e-300) {
        return Err(Error::Domain(
            "singular linearized system (vanishing damping, detunings and couplings)".into(),
        ));
    }
    let a_ss = num_a / den;
    let b_ss = -(i * params.h * ga + g * g) / den1 * a_ss;
    let sigma_ss = -i * (g * a_ss + g.conj() * b_ss) / ga;
    Ok(output_state(params, a_ss, b_ss, sigma_ss))
}

/// Build output T, R from steady-state amplitudes via
/// a_out = -a_in + sqrt(2 kex) a (factorized flux |<a_out>|^2).
fn output_state(params: &CqedParams, a_ss: C64, b_ss: C64, sigma_ss: C64) -> CqedState {
    let p_in = params.p_in();
    let (t, r, zero_input) = if p_in <= 0.0 {
        (0.0, 0.0, true)
    } else {
        let sqrt2kex = (2.0 * params.kappa_ex).sqrt();
        let a_in = params.eps_p / (C64::i() * sqrt2kex);
        let a_out = -a_in + sqrt2kex * a_ss;
        let b_out = sqrt2kex * b_ss;
        (a_out.norm_sqr() / p_in, b_out.norm_sqr() / p_in, false)
    };
    CqedState {
        a_ss,
        b_ss,
        sigma_ss,
        excited_population: sigma_ss.norm_sqr(),
        transmission: t,
        reflection: r,
        zero_input,
    }
}

/// Steady state by direct solve of the 3x3 drift system, plus the LU-backed
/// spatial-derivative machinery used by forces. Equivalent to
/// [`steady_state_linear`]; kept separate so each can check the other.
pub struct LinearSolve {
    pub state: CqedState,
    lu: nalgebra::LU<C64, nalgebra::U3, nalgebra::U3>,
}

impl LinearSolve {
    pub fn new(params: &CqedParams) -> Result<Self> {
        let m = params.drift_matrix();
        let lu = m.lu();
        let x = lu
            .solve(&(-params.drive_vector()))
            .ok_or_else(|| Error::Domain("singular linearized system".into()))?;
        let state = output_state(params, x[0], x[1], x[2]);
        Ok(LinearSolve { state, lu })
    }

    /// Solve M y = rhs with the cached factorization.
    pub fn solve(&self, rhs: &Vector3<C64>) -> Option<Vector3<C64>> {
        self.lu.solve(rhs)
    }

    /// Spatial derivative of the steady-state vector along one direction:
    /// from M x + c = 0, dx = -M^-1 (dM) x.
    pub fn state_derivative(&self, dm: &Matrix3<C64>) -> Option<Vector3<C64>> {
        let x = Vector3::new(self.state.a_ss, self.state.b_ss, self.state.sigma_ss);
        self.lu.solve(&(-(dm * x)))
    }
}

/// Eigenvalues of the drift matrix, sorted by descending imaginary part
/// (ties broken by descending real part) for stable branch tracking.
pub fn system_eigenvalues(params: &CqedParams) -> [C64; 3] {
    let m = params.drift_matrix();
    // characteristic polynomial: lambda^3 - tr lambda^2 + m2 lambda - det
    let tr = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
    let m2 = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
        + m[(0, 0)] * m[(2, 2)]
        - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)]
        - m[(1, 2)] * m[(2, 1)];
    let det = m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)]);
    let mut roots = cubic_roots(-tr, m2, -det);
    roots.sort_by(|a, b| {
        b.im.partial_cmp(&a.im)
            .unwrap()
            .then(b.re.partial_cmp(&a.re).unwrap())
    });
    roots
}

/// Solver choice for transmission/reflection observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Closed-form linearized amplitudes (used inside trajectory propagation).
    Linear,
    /// Truncated-Fock master equation (used for reported observables).
    Full,
}

/// Transmission/reflection through the chosen solver.
pub fn transmission(params: &CqedParams, solver: SolverKind) -> Result<(f64, f64)> {
    match solver {
        SolverKind::Linear => {
            let s = steady_state_linear(params)?;
            Ok((s.transmission, s.reflection))
        }
        SolverKind::Full => {
            let s = fock::steady_state_full_auto(params, fock::DEFAULT_CUTOFF)?;
            Ok((s.transmission, s.reflection))
        }
    }
}

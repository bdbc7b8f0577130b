//! Toroid geometry and whispering-gallery mode fields.
//!
//! The toroid is a circle of diameter `D_m` revolved around the z axis at major
//! diameter `D_M = D_p - D_m`. Atom positions use cylindrical coordinates
//! (rho, phi, z); the mode cross-section is described by the surface distance
//! `d(rho, z)` and the angle `psi(rho, z)` around the minor circle (psi = 0 at
//! the outer equator).
//!
//! The analytic mode approximation is a Gaussian wrapped around the surface,
//! `f = exp(-d/lambda_bar) * exp(-(psi/psi0)^2)`, optionally multiplied by a
//! Hermite-like angular factor for higher-order modes (extra nodes along psi).
//! Imported grids (e.g. from an external eigenmode solver) are supported via a
//! plain-text format with bilinear interpolation.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::numerics::GaussLegendre;
use crate::{Error, Result};

/// Toroid defined by principal diameter `D_p` and minor diameter `D_m` (um).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ToroidGeometry {
    pub principal_diameter_um: f64,
    pub minor_diameter_um: f64,
}

impl ToroidGeometry {
    pub fn new(principal_diameter_um: f64, minor_diameter_um: f64) -> Result<Self> {
        if !(principal_diameter_um > minor_diameter_um && minor_diameter_um > 0.0) {
            return Err(Error::Domain(format!(
                "toroid requires D_p > D_m > 0, got D_p={principal_diameter_um}, D_m={minor_diameter_um}"
            )));
        }
        Ok(ToroidGeometry {
            principal_diameter_um,
            minor_diameter_um,
        })
    }

    /// Major diameter `D_M = D_p - D_m` (diameter of the minor-circle center line).
    pub fn major_diameter_um(&self) -> f64 {
        self.principal_diameter_um - self.minor_diameter_um
    }

    /// Radius of the minor-circle center line, `D_M / 2`.
    pub fn ring_radius(&self) -> f64 {
        0.5 * self.major_diameter_um()
    }

    /// Minor radius `D_m / 2`.
    pub fn minor_radius(&self) -> f64 {
        0.5 * self.minor_diameter_um
    }

    /// Signed distance to the torus surface; negative inside the dielectric.
    pub fn surface_distance(&self, rho_um: f64, z_um: f64) -> f64 {
        let u = rho_um - self.ring_radius();
        (u * u + z_um * z_um).sqrt() - self.minor_radius()
    }

    /// Angle around the toroid cross-section, zero at the outer equator.
    pub fn psi(&self, rho_um: f64, z_um: f64) -> f64 {
        z_um.atan2(rho_um - self.ring_radius())
    }

    /// Outward unit normal of the surface-distance field, (n_rho, n_z).
    pub fn surface_normal(&self, rho_um: f64, z_um: f64) -> (f64, f64) {
        let u = rho_um - self.ring_radius();
        let r = (u * u + z_um * z_um).sqrt();
        if r < 1e-12 {
            (1.0, 0.0)
        } else {
            (u / r, z_um / r)
        }
    }
}

/// Uniform 2-D sample of a mode function over a (rho, z) rectangle.
#[derive(Debug, Clone)]
pub struct ModeGrid {
    pub nrho: usize,
    pub nz: usize,
    pub rho0_um: f64,
    pub drho_um: f64,
    pub z0_um: f64,
    pub dz_um: f64,
    /// Treat points outside the grid as f = 0 instead of erroring.
    pub pad_zero: bool,
    /// Row-major, rho index major: `values[i * nz + j]`.
    pub values: Vec<f64>,
}

impl ModeGrid {
    pub fn rho_max(&self) -> f64 {
        self.rho0_um + self.drho_um * (self.nrho - 1) as f64
    }

    pub fn z_max(&self) -> f64 {
        self.z0_um + self.dz_um * (self.nz - 1) as f64
    }

    fn contains(&self, rho: f64, z: f64) -> bool {
        rho >= self.rho0_um && rho <= self.rho_max() && z >= self.z0_um && z <= self.z_max()
    }

    /// Bilinear interpolation. Out-of-grid queries error unless `pad_zero`.
    pub fn interpolate(&self, rho: f64, z: f64) -> Result<f64> {
        if !self.contains(rho, z) {
            if self.pad_zero {
                return Ok(0.0);
            }
            return Err(Error::Domain(format!(
                "grid query ({rho}, {z}) um outside [{}, {}] x [{}, {}]",
                self.rho0_um,
                self.rho_max(),
                self.z0_um,
                self.z_max()
            )));
        }
        let fi = ((rho - self.rho0_um) / self.drho_um).clamp(0.0, (self.nrho - 1) as f64);
        let fj = ((z - self.z0_um) / self.dz_um).clamp(0.0, (self.nz - 1) as f64);
        let i = (fi as usize).min(self.nrho - 2);
        let j = (fj as usize).min(self.nz - 2);
        let tx = fi - i as f64;
        let ty = fj - j as f64;
        let v = |i: usize, j: usize| self.values[i * self.nz + j];
        Ok(v(i, j) * (1.0 - tx) * (1.0 - ty)
            + v(i + 1, j) * tx * (1.0 - ty)
            + v(i, j + 1) * (1.0 - tx) * ty
            + v(i + 1, j + 1) * tx * ty)
    }

    /// Parse the plain-text grid format (see `write_text`).
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut header = std::collections::HashMap::new();
        let mut values = Vec::new();
        let mut in_values = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !in_values {
                let mut parts = line.split_whitespace();
                let key = parts.next().unwrap_or("");
                if let Ok(first) = key.parse::<f64>() {
                    in_values = true;
                    values.push(first);
                    for tok in parts {
                        values.push(tok.parse::<f64>().map_err(|e| {
                            Error::Config(format!("bad grid value {tok:?}: {e}"))
                        })?);
                    }
                    continue;
                }
                let val = parts
                    .next()
                    .ok_or_else(|| Error::Config(format!("grid header line {line:?} has no value")))?;
                header.insert(key.to_string(), val.to_string());
            } else {
                for tok in line.split_whitespace() {
                    values.push(
                        tok.parse::<f64>()
                            .map_err(|e| Error::Config(format!("bad grid value {tok:?}: {e}")))?,
                    );
                }
            }
        }
        let get = |k: &str| -> Result<f64> {
            header
                .get(k)
                .ok_or_else(|| Error::Config(format!("grid header missing {k}")))?
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("grid header {k}: {e}")))
        };
        let grid = ModeGrid {
            nrho: get("nrho")? as usize,
            nz: get("nz")? as usize,
            rho0_um: get("rho0_um")?,
            drho_um: get("drho_um")?,
            z0_um: get("z0_um")?,
            dz_um: get("dz_um")?,
            pad_zero: header.get("pad_zero").map(|v| v == "1").unwrap_or(false),
            values,
        };
        if grid.nrho < 2 || grid.nz < 2 {
            return Err(Error::Config("grid needs at least 2x2 points".into()));
        }
        if grid.values.len() != grid.nrho * grid.nz {
            return Err(Error::Config(format!(
                "grid has {} values, expected {}x{}",
                grid.values.len(),
                grid.nrho,
                grid.nz
            )));
        }
        if !(grid.drho_um > 0.0 && grid.dz_um > 0.0) {
            return Err(Error::Config("grid steps must be positive".into()));
        }
        Ok(grid)
    }

    pub fn write_text(&self) -> String {
        let mut s = String::from("# toroid-sim mode grid, format v1\n");
        s.push_str(&format!("nrho {}\n", self.nrho));
        s.push_str(&format!("nz {}\n", self.nz));
        s.push_str(&format!("rho0_um {}\n", self.rho0_um));
        s.push_str(&format!("drho_um {}\n", self.drho_um));
        s.push_str(&format!("z0_um {}\n", self.z0_um));
        s.push_str(&format!("dz_um {}\n", self.dz_um));
        s.push_str(&format!("pad_zero {}\n", if self.pad_zero { 1 } else { 0 }));
        for i in 0..self.nrho {
            let row: Vec<String> = (0..self.nz)
                .map(|j| format!("{:.*e}", 9, self.values[i * self.nz + j]))
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone)]
pub enum ModeShape {
    AnalyticGaussian,
    ImportedGrid(ModeGrid),
}

/// A whispering-gallery mode: geometry, spatial profile, azimuthal number and
/// the calibrated coupling scale.
#[derive(Debug, Clone)]
pub struct ModeModel {
    pub geometry: ToroidGeometry,
    pub azimuthal_number: i32,
    pub wavelength_um: f64,
    /// Characteristic angular mode width psi0 (rad).
    pub mode_width_rad: f64,
    /// Hermite-like angular order; 0 is the lowest-order Gaussian of Eq-(4) form.
    /// Higher orders carry additional nodes along psi and signed lobes, so f
    /// ranges over [-1, 1]; the lowest order stays in [0, 1].
    pub angular_order: u32,
    pub polarization_factor: f64,
    /// Standing-wave coupling maximum g_max = sqrt(2) g_tw^max, rad/us.
    pub g_max: f64,
    pub shape: ModeShape,
    angular_norm: f64,
}

fn hermite(n: u32, u: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0 * u,
        2 => 4.0 * u * u - 2.0,
        3 => 8.0 * u * u * u - 12.0 * u,
        4 => 16.0 * u.powi(4) - 48.0 * u * u + 12.0,
        _ => {
            let mut h0 = 16.0 * u.powi(4) - 48.0 * u * u + 12.0;
            let mut h1 = 32.0 * u.powi(5) - 160.0 * u * u * u + 120.0 * u;
            for k in 5..n {
                let h2 = 2.0 * u * h1 - 2.0 * k as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        }
    }
}

impl ModeModel {
    pub fn analytic(
        geometry: ToroidGeometry,
        wavelength_um: f64,
        azimuthal_number: i32,
        mode_width_rad: f64,
        angular_order: u32,
    ) -> Self {
        let mut m = ModeModel {
            geometry,
            azimuthal_number,
            wavelength_um,
            mode_width_rad,
            angular_order,
            polarization_factor: 0.6,
            g_max: 0.0,
            shape: ModeShape::AnalyticGaussian,
            angular_norm: 1.0,
        };
        m.angular_norm = m.compute_angular_norm();
        m
    }

    pub fn from_grid(
        geometry: ToroidGeometry,
        grid: ModeGrid,
        wavelength_um: f64,
        azimuthal_number: i32,
    ) -> Self {
        ModeModel {
            geometry,
            azimuthal_number,
            wavelength_um,
            mode_width_rad: 0.0,
            angular_order: 0,
            polarization_factor: 0.6,
            g_max: 0.0,
            shape: ModeShape::ImportedGrid(grid),
            angular_norm: 1.0,
        }
    }

    pub fn with_g_max(mut self, g_max: f64) -> Self {
        self.g_max = g_max;
        self
    }

    pub fn with_polarization_factor(mut self, p: f64) -> Self {
        self.polarization_factor = p;
        self
    }

    /// Evanescent decay length lambda_bar = lambda / 2pi.
    pub fn lambda_bar(&self) -> f64 {
        self.wavelength_um / std::f64::consts::TAU
    }

    /// Traveling-wave coupling maximum g_tw^max = g_max / sqrt(2).
    pub fn g_tw_max(&self) -> f64 {
        self.g_max / std::f64::consts::SQRT_2
    }

    fn compute_angular_norm(&self) -> f64 {
        if self.angular_order == 0 {
            return 1.0;
        }
        let psi0 = self.mode_width_rad;
        let mut max = 0.0f64;
        for i in 0..=4000 {
            let psi = -std::f64::consts::PI + std::f64::consts::TAU * i as f64 / 4000.0;
            let u = std::f64::consts::SQRT_2 * psi / psi0;
            let v = (hermite(self.angular_order, u) * (-(psi / psi0).powi(2)).exp()).abs();
            max = max.max(v);
        }
        max
    }

    fn angular_factor(&self, psi: f64) -> f64 {
        let psi0 = self.mode_width_rad;
        let g = (-(psi / psi0).powi(2)).exp();
        if self.angular_order == 0 {
            g
        } else {
            hermite(self.angular_order, std::f64::consts::SQRT_2 * psi / psi0) * g
                / self.angular_norm
        }
    }

    fn angular_factor_derivative(&self, psi: f64) -> f64 {
        let psi0 = self.mode_width_rad;
        let g = (-(psi / psi0).powi(2)).exp();
        if self.angular_order == 0 {
            return -2.0 * psi / (psi0 * psi0) * g;
        }
        let n = self.angular_order;
        let u = std::f64::consts::SQRT_2 * psi / psi0;
        // d/dpsi [H_n(u) g] with H_n' = 2n H_{n-1}
        let dh = 2.0 * n as f64 * hermite(n - 1, u) * std::f64::consts::SQRT_2 / psi0;
        (dh * g + hermite(n, u) * (-2.0 * psi / (psi0 * psi0)) * g) / self.angular_norm
    }

    /// Strict mode-function evaluation per the operation contract: errors on an
    /// out-of-grid query for an imported grid.
    pub fn mode_function(&self, rho: f64, z: f64) -> Result<f64> {
        match &self.shape {
            ModeShape::AnalyticGaussian => Ok(self.analytic_field(rho, z)),
            ModeShape::ImportedGrid(grid) => grid.interpolate(rho, z),
        }
    }

    fn analytic_field(&self, rho: f64, z: f64) -> f64 {
        let d = self.geometry.surface_distance(rho, z);
        // Atoms never propagate inside the dielectric; the interior field is 0.
        // The 1 fm tolerance keeps points that land on the surface up to
        // rounding from being misclassified as interior.
        if d < -1e-9 {
            return 0.0;
        }
        let psi = self.geometry.psi(rho, z);
        (-d.max(0.0) / self.lambda_bar()).exp() * self.angular_factor(psi)
    }

    /// Infallible field evaluation used inside trajectory loops. Imported grids
    /// must be constructed with `pad_zero` for this path.
    pub fn field(&self, rho: f64, z: f64) -> f64 {
        match &self.shape {
            ModeShape::AnalyticGaussian => self.analytic_field(rho, z),
            ModeShape::ImportedGrid(grid) => grid.interpolate(rho, z).unwrap_or(0.0),
        }
    }

    /// Field value and its (d/drho, d/dz) gradient.
    pub fn field_gradient(&self, rho: f64, z: f64) -> (f64, f64, f64) {
        match &self.shape {
            ModeShape::AnalyticGaussian => {
                let d = self.geometry.surface_distance(rho, z);
                if d < -1e-9 {
                    return (0.0, 0.0, 0.0);
                }
                let lb = self.lambda_bar();
                let psi = self.geometry.psi(rho, z);
                let radial = (-d / lb).exp();
                let ang = self.angular_factor(psi);
                let dang = self.angular_factor_derivative(psi);
                let f = radial * ang;
                // d and psi gradients in the (rho, z) plane
                let u = rho - self.geometry.ring_radius();
                let r = (u * u + z * z).sqrt().max(1e-12);
                let (dd_drho, dd_dz) = (u / r, z / r);
                let (dpsi_drho, dpsi_dz) = (-z / (r * r), u / (r * r));
                let df_drho = radial * (-dd_drho / lb * ang + dang * dpsi_drho);
                let df_dz = radial * (-dd_dz / lb * ang + dang * dpsi_dz);
                (f, df_drho, df_dz)
            }
            ModeShape::ImportedGrid(grid) => {
                let f = grid.interpolate(rho, z).unwrap_or(0.0);
                // central differences, 1 nm step
                let h = 1e-3;
                let fp = grid.interpolate(rho + h, z).unwrap_or(0.0);
                let fm = grid.interpolate(rho - h, z).unwrap_or(0.0);
                let gp = grid.interpolate(rho, z + h).unwrap_or(0.0);
                let gm = grid.interpolate(rho, z - h).unwrap_or(0.0);
                (f, (fp - fm) / (2.0 * h), (gp - gm) / (2.0 * h))
            }
        }
    }

    /// Complex traveling-wave coupling g_tw = g_tw^max f(rho,z) e^{i m phi} at a
    /// Cartesian position.
    pub fn coupling_tw(&self, x: f64, y: f64, z: f64) -> C64 {
        let rho = x.hypot(y);
        let phi = y.atan2(x);
        let f = self.field(rho, z);
        C64::from_polar(self.g_tw_max() * f, self.azimuthal_number as f64 * phi)
    }

    /// g_tw and its Cartesian gradient [d/dx, d/dy, d/dz].
    pub fn coupling_tw_gradient(&self, x: f64, y: f64, z: f64) -> (C64, [C64; 3]) {
        let rho = x.hypot(y).max(1e-12);
        let phi = y.atan2(x);
        let (f, df_drho, df_dz) = self.field_gradient(rho, z);
        let m = self.azimuthal_number as f64;
        let phase = C64::from_polar(1.0, m * phi);
        let scale = self.g_tw_max();
        let g = scale * f * phase;
        // grad g = scale * e^{im phi} (grad f + i m f grad phi)
        let (drho_dx, drho_dy) = (x / rho, y / rho);
        let (dphi_dx, dphi_dy) = (-y / (rho * rho), x / (rho * rho));
        let im_f = C64::new(0.0, m * f);
        let gx = scale * phase * (C64::new(df_drho * drho_dx, 0.0) + im_f * dphi_dx);
        let gy = scale * phase * (C64::new(df_drho * drho_dy, 0.0) + im_f * dphi_dy);
        let gz = scale * phase * C64::new(df_dz, 0.0);
        (g, [gx, gy, gz])
    }

    /// Standing-wave projections (g_A, g_B) = g_max f (cos theta, sin theta),
    /// theta = m phi.
    pub fn standing_amplitudes(&self, x: f64, y: f64, z: f64) -> (f64, f64) {
        let rho = x.hypot(y);
        let phi = y.atan2(x);
        let f = self.field(rho, z);
        let theta = self.azimuthal_number as f64 * phi;
        (self.g_max * f * theta.cos(), self.g_max * f * theta.sin())
    }

    /// Mode volume V_m = 2 pi Int dA eps(rho,z) rho f^2 by 2-D quadrature.
    ///
    /// For the analytic mode the field is zero inside the dielectric, so this is
    /// the evanescent-exterior volume; imported grids may carry interior values,
    /// weighted by `epsilon_interior` where d < 0. Errors when the refined
    /// quadrature disagrees by more than 1e-4 relative.
    pub fn mode_volume(&self, epsilon_interior: f64) -> Result<f64> {
        let coarse = self.mode_volume_at_resolution(epsilon_interior, 1)?;
        let fine = self.mode_volume_at_resolution(epsilon_interior, 2)?;
        if coarse == 0.0 && fine == 0.0 {
            return Ok(0.0);
        }
        let rel = (fine - coarse).abs() / fine.abs().max(1e-300);
        if rel > 1e-4 {
            return Err(Error::Numeric(format!(
                "mode-volume quadrature not converged: {coarse} vs {fine} (rel {rel:.2e})"
            )));
        }
        Ok(fine)
    }

    fn mode_volume_at_resolution(&self, epsilon_interior: f64, refine: usize) -> Result<f64> {
        match &self.shape {
            ModeShape::AnalyticGaussian => {
                let lb = self.lambda_bar();
                let rm = self.geometry.minor_radius();
                let ring = self.geometry.ring_radius();
                let d_max = 20.0 * lb;
                let gl_d = GaussLegendre::new(48 * refine);
                let gl_psi = GaussLegendre::new(96 * refine);
                let v = gl_psi.integrate(-std::f64::consts::PI, std::f64::consts::PI, |psi| {
                    let ang2 = self.angular_factor(psi).powi(2);
                    gl_d.integrate(0.0, d_max, |d| {
                        let rho = ring + (rm + d) * psi.cos();
                        if rho <= 0.0 {
                            return 0.0;
                        }
                        let f2 = (-2.0 * d / lb).exp() * ang2;
                        rho * f2 * (rm + d)
                    })
                });
                Ok(std::f64::consts::TAU * v)
            }
            ModeShape::ImportedGrid(grid) => {
                let n_rho = (grid.nrho - 1) * 2 * refine;
                let n_z = (grid.nz - 1) * 2 * refine;
                let drho = (grid.rho_max() - grid.rho0_um) / n_rho as f64;
                let dz = (grid.z_max() - grid.z0_um) / n_z as f64;
                let mut sum = 0.0;
                // midpoint rule over the bilinear interpolant
                for i in 0..n_rho {
                    let rho = grid.rho0_um + (i as f64 + 0.5) * drho;
                    for j in 0..n_z {
                        let z = grid.z0_um + (j as f64 + 0.5) * dz;
                        let f = grid.interpolate(rho, z)?;
                        let eps = if self.geometry.surface_distance(rho, z) < 0.0 {
                            epsilon_interior
                        } else {
                            1.0
                        };
                        sum += eps * rho * f * f;
                    }
                }
                Ok(std::f64::consts::TAU * sum * drho * dz)
            }
        }
    }

    /// Maximum couplings from the mode volume (Eq.-(3) route):
    /// g_tw^max = pol * sqrt(3 pi c^3 gamma / (omega_a0^2 V_m)), g_max = sqrt(2) g_tw^max.
    pub fn coupling_max_from_volume(
        &self,
        gamma: f64,
        omega_a0: f64,
        mode_volume_um3: f64,
    ) -> Result<(f64, f64)> {
        if mode_volume_um3 <= 0.0 {
            return Err(Error::Domain(format!(
                "mode volume must be positive, got {mode_volume_um3}"
            )));
        }
        let c = crate::constants::C_UM_PER_US;
        let g_circ =
            (3.0 * std::f64::consts::PI * c * c * c * gamma / (omega_a0 * omega_a0 * mode_volume_um3))
                .sqrt();
        let g_tw_max = self.polarization_factor * g_circ;
        Ok((g_tw_max, std::f64::consts::SQRT_2 * g_tw_max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geo() -> ToroidGeometry {
        ToroidGeometry::new(24.0, 3.0).unwrap()
    }

    fn mode() -> ModeModel {
        ModeModel::analytic(geo(), 0.852, 118, 0.35, 0).with_g_max(crate::constants::mhz(100.0))
    }

    #[test]
    fn surface_distance_examples() {
        let g = geo();
        assert_relative_eq!(g.surface_distance(12.0, 0.0), 0.0, epsilon = 1e-12);
        assert_relative_eq!(g.surface_distance(12.1, 0.0), 0.1, epsilon = 1e-12);
        assert_relative_eq!(g.surface_distance(10.5, 0.0), -1.5, epsilon = 1e-12);
    }

    #[test]
    fn mode_function_normalization_and_decay() {
        let m = mode();
        // f = 1 at d = 0, psi = 0
        assert_relative_eq!(m.field(12.0, 0.0), 1.0, epsilon = 1e-12);
        // f = 1/e at d = lambda_bar
        let lb = m.lambda_bar();
        assert_relative_eq!(m.field(12.0 + lb, 0.0), (-1.0f64).exp(), epsilon = 1e-12);
        // f = 1/e at psi = psi0 (walk around the minor circle at d = 0)
        let psi0 = 0.35f64;
        let rho = 10.5 + 1.5 * psi0.cos();
        let z = 1.5 * psi0.sin();
        assert_relative_eq!(m.field(rho, z), (-1.0f64).exp(), max_relative = 1e-10);
    }

    #[test]
    fn field_is_monotone_in_distance_at_fixed_psi() {
        let m = mode();
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let d = i as f64 * 0.01;
            let f = m.field(12.0 + d, 0.0);
            assert!(f < prev);
            prev = f;
        }
    }

    #[test]
    fn coupling_phase_and_projections() {
        let m = mode();
        // phi = 0: g_tw real and positive at the surface
        let g = m.coupling_tw(12.0, 0.0, 0.0);
        assert_relative_eq!(g.re, m.g_tw_max(), max_relative = 1e-12);
        assert!(g.im.abs() < 1e-12);
        // theta = pi/2: g_A = 0, g_B = g_max f
        let phi = std::f64::consts::FRAC_PI_2 / 118.0;
        let (ga, gb) = m.standing_amplitudes(12.0 * phi.cos(), 12.0 * phi.sin(), 0.0);
        assert!(ga.abs() < 1e-9 * m.g_max);
        assert_relative_eq!(gb, m.g_max, max_relative = 1e-9);
        // d = lambda_bar: |g_tw| = g_tw^max / e
        let g = m.coupling_tw(12.0 + m.lambda_bar(), 0.0, 0.0);
        assert_relative_eq!(g.norm(), m.g_tw_max() / std::f64::consts::E, max_relative = 1e-12);
    }

    #[test]
    fn standing_amplitudes_satisfy_sum_rule() {
        let m = mode();
        for k in 0..24 {
            let phi = k as f64 * 0.26;
            let (x, y) = (12.2 * phi.cos(), 12.2 * phi.sin());
            let (ga, gb) = m.standing_amplitudes(x, y, 0.3);
            let gtw = m.coupling_tw(x, y, 0.3);
            assert_relative_eq!(
                ga * ga + gb * gb,
                2.0 * gtw.norm_sqr(),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn coupling_gradient_matches_finite_differences() {
        let m = mode();
        let (x, y, z) = (11.9, 1.7, 0.4);
        let (_, grad) = m.coupling_tw_gradient(x, y, z);
        let h = 1e-6;
        let fd = [
            (m.coupling_tw(x + h, y, z) - m.coupling_tw(x - h, y, z)) / (2.0 * h),
            (m.coupling_tw(x, y + h, z) - m.coupling_tw(x, y - h, z)) / (2.0 * h),
            (m.coupling_tw(x, y, z + h) - m.coupling_tw(x, y, z - h)) / (2.0 * h),
        ];
        for i in 0..3 {
            assert!((grad[i] - fd[i]).norm() < 1e-5 * grad[i].norm().max(1.0));
        }
    }

    #[test]
    fn grid_round_trips_against_analytic() {
        let m = mode();
        let (nrho, nz) = (301, 241);
        let (rho0, drho) = (11.0, 0.01);
        let (z0, dz) = (-1.2, 0.01);
        let mut values = vec![0.0; nrho * nz];
        for i in 0..nrho {
            for j in 0..nz {
                values[i * nz + j] = m.field(rho0 + i as f64 * drho, z0 + j as f64 * dz);
            }
        }
        let grid = ModeGrid {
            nrho,
            nz,
            rho0_um: rho0,
            drho_um: drho,
            z0_um: z0,
            dz_um: dz,
            pad_zero: true,
            values,
        };
        let text = grid.write_text();
        let parsed = ModeGrid::parse_text(&text).unwrap();
        let gm = ModeModel::from_grid(geo(), parsed, 0.852, 118).with_g_max(m.g_max);
        for &(rho, z) in &[(12.05, 0.0), (12.3, 0.25), (11.8, -0.6), (12.9, 0.9)] {
            assert_relative_eq!(gm.field(rho, z), m.field(rho, z), max_relative = 2e-3);
        }
        // out-of-grid strict query errors when pad_zero is off
        let mut strict = gm.clone();
        if let ModeShape::ImportedGrid(ref mut g) = strict.shape {
            g.pad_zero = false;
        }
        assert!(strict.mode_function(20.0, 0.0).is_err());
    }

    #[test]
    fn mode_volume_scales_quadratically_and_matches_constant_annulus() {
        // uniform f = 1 over an annular box, eps = 1: V = 2 pi rho_bar A
        let nrho = 21;
        let nz = 11;
        let grid = ModeGrid {
            nrho,
            nz,
            rho0_um: 14.0,
            drho_um: 0.05,
            z0_um: -0.25,
            dz_um: 0.05,
            pad_zero: true,
            values: vec![1.0; nrho * nz],
        };
        let m = ModeModel::from_grid(geo(), grid.clone(), 0.852, 118);
        let v = m.mode_volume(1.0).unwrap();
        let area = 1.0 * 0.5;
        let rho_bar = 14.5;
        assert_relative_eq!(v, std::f64::consts::TAU * rho_bar * area, max_relative = 1e-6);

        // halving f^2 halves V_m
        let half = ModeGrid {
            values: grid.values.iter().map(|v| v / 2f64.sqrt()).collect(),
            ..grid
        };
        let mh = ModeModel::from_grid(geo(), half, 0.852, 118);
        assert_relative_eq!(mh.mode_volume(1.0).unwrap(), v / 2.0, max_relative = 1e-9);
    }

    #[test]
    fn coupling_max_scalings() {
        let m = mode();
        let gamma = crate::constants::CS_D2_GAMMA_FIELD;
        let omega = crate::constants::TAU * crate::constants::C_UM_PER_US / 0.852;
        let v0 = m.mode_volume(2.1).unwrap();
        assert!(v0 > 0.0);
        let m1 = m.clone().with_polarization_factor(1.0);
        let (g1, gmax1) = m1.coupling_max_from_volume(gamma, omega, v0).unwrap();
        let (g4, _) = m1.coupling_max_from_volume(gamma, omega, 4.0 * v0).unwrap();
        assert_relative_eq!(g4, g1 / 2.0, max_relative = 1e-12);
        let (g06, _) = m
            .clone()
            .with_polarization_factor(0.6)
            .coupling_max_from_volume(gamma, omega, v0)
            .unwrap();
        assert_relative_eq!(g06, 0.6 * g1, max_relative = 1e-12);
        assert_relative_eq!(gmax1, std::f64::consts::SQRT_2 * g1, max_relative = 1e-12);
        assert!(m1.coupling_max_from_volume(gamma, omega, 0.0).is_err());
    }
}

//! Physical constants in the crate unit system (um, us, rad/us), CODATA 2018.
//!
//! Velocities in um/us are numerically equal to m/s; an angular frequency of
//! `TAU` rad/us is "1 /2pi MHz".

pub use std::f64::consts::TAU;

/// Speed of light, um/us (numerically equal to m/s).
pub const C_UM_PER_US: f64 = 2.997_924_58e8;

/// hbar, J s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J/K (exact).
pub const KB_SI: f64 = 1.380_649e-23;

/// Cesium-133 atomic mass, kg.
pub const M_CS_KG: f64 = 2.206_946_50e-25;

/// hbar / m_Cs in um^2/us. Converts a force expressed as F/hbar
/// (rad us^-1 um^-1) into an acceleration in um/us^2.
pub const HBAR_OVER_M_CS: f64 = HBAR_SI / M_CS_KG * 1e6;

/// k_B / hbar in rad/(us K): energy k_B*T as an angular frequency.
pub const KB_OVER_HBAR: f64 = KB_SI / HBAR_SI * 1e-6;

/// k_B / m_Cs in (um/us)^2 per K. Thermal velocity variance per axis.
pub const KB_OVER_M_CS: f64 = KB_SI / M_CS_KG;

/// Standard gravity, um/us^2.
pub const G_EARTH: f64 = 9.806_65e-6;

/// e^2/m_e in um^3 (rad/us)^2 (Gaussian units; numerically equal to cm^3/s^2).
/// One Lorentz-oscillator polarizability unit: alpha = (e^2/m_e) f / omega^2.
pub const E2_OVER_ME: f64 = 2.532_638_05e8;

/// 1 eV as an angular frequency in rad/us.
pub const EV_TO_RAD_PER_US: f64 = 1.602_176_634e-19 / HBAR_SI * 1e-6;

/// 1 cm^-1 (spectroscopic wavenumber) as an angular frequency in rad/us.
pub const INVCM_TO_RAD_PER_US: f64 = TAU * 2.997_924_58e10 * 1e-6;

/// Cs D2 line (6S_1/2 -> 6P_3/2) wavelength, um.
pub const CS_D2_WAVELENGTH_UM: f64 = 0.852_347_275_82;

/// Cs D2 atomic *field* decay rate gamma = Gamma/2, rad/us.
pub const CS_D2_GAMMA_FIELD: f64 = TAU * 2.611_35;

/// Convert "/2pi MHz" to rad/us.
pub fn mhz(f_mhz: f64) -> f64 {
    TAU * f_mhz
}

/// Convert rad/us to "/2pi MHz".
pub fn to_mhz(omega: f64) -> f64 {
    omega / TAU
}

/// Energy in mK (E/k_B) as an angular frequency E/hbar, rad/us.
pub fn mk_to_rad_per_us(t_mk: f64) -> f64 {
    KB_OVER_HBAR * t_mk * 1e-3
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_conversions_are_consistent() {
        // 1 mK of energy is about 2pi x 20.84 MHz.
        assert!((to_mhz(mk_to_rad_per_us(1.0)) - 20.84).abs() < 0.01);
        // D2 angular frequency comes out near 2pi x 351.73 THz.
        let omega_a = TAU * C_UM_PER_US / CS_D2_WAVELENGTH_UM;
        assert!((omega_a / TAU * 1e-6 - 351.7257).abs() < 1e-3);
        // hbar/m in um^2/us.
        assert!((HBAR_OVER_M_CS - 4.7784e-4).abs() < 1e-7);
    }
}

//! Physical parameters, unit conventions and derived coupling quantities.
//!
//! Every frequency and rate is stored as an angular quantity (rad/s). Config
//! files may give either `*_hz` keys (multiplied by 2π on load) or `*_rad_s`
//! keys, never both for the same quantity.

use serde_json::{Map, Value};

use crate::constants::{C_LIGHT, HBAR, K_B, TWO_PI};
use crate::error::{Error, Result};

/// Experimental inputs, SI units, angular frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    /// Cavity length, m.
    pub cavity_length: f64,
    /// Effective mirror mass, kg.
    pub mirror_mass: f64,
    /// Mechanical frequency, rad/s.
    pub mirror_freq: f64,
    /// Mechanical quality factor. Exactly one of this and `mirror_damping`.
    pub quality_factor: Option<f64>,
    /// Mechanical energy damping rate, rad/s.
    pub mirror_damping: Option<f64>,
    /// Phonon bath temperature, K.
    pub bath_temperature: f64,
    /// Cavity amplitude decay rate, rad/s.
    pub cavity_decay: f64,
    /// Pump wavelength, m.
    pub pump_wavelength: f64,
    /// Pump power, W.
    pub pump_power: f64,
    /// Bogoliubov mode frequency, rad/s.
    pub bogoliubov_freq: f64,
    /// Atom-cavity optomechanical rate, rad/s.
    pub atom_cavity_rate: f64,
    /// Mirror-cavity coupling, rad/(s·m). Defaults to omega_C / L.
    pub mirror_coupling_override: Option<f64>,
    /// Static cavity pull from the condensate, rad/s. Only enters the bare detuning.
    pub condensate_pull: Option<f64>,
}

/// One broken invariant of a [`PhysicalParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub constraint: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.constraint)
    }
}

/// Quantities derived once from [`PhysicalParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedCouplings {
    /// Pump angular frequency 2πc/λ, rad/s.
    pub omega_laser: f64,
    /// Cavity angular frequency, approximated by the pump frequency, rad/s.
    pub omega_cavity: f64,
    /// Mirror-cavity coupling, rad/(s·m).
    pub chi: f64,
    /// Pump coupling sqrt(2κR/ħω_L), rad/s.
    pub eta: f64,
    /// Mirror zero-point length sqrt(ħ/mω_m), m.
    pub x_zpf: f64,
    /// Mirror zero-point momentum sqrt(ħmω_m), kg·m/s.
    pub p_zpf: f64,
    /// Mechanical damping rate, rad/s.
    pub gamma: f64,
    /// Bose occupancy 1/(exp(ħω_m/k_B T) - 1).
    pub thermal_occupancy: f64,
    /// Classical occupancy k_B T / ħω_m.
    pub classical_occupancy: f64,
}

impl DerivedCouplings {
    /// Single-photon mirror coupling χ·x_zpf, rad/s.
    pub fn mirror_rate(&self) -> f64 {
        self.chi * self.x_zpf
    }
}

/// Check every invariant; an empty list means the parameters are usable.
pub fn validate(params: &PhysicalParams) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut positive = |field: &'static str, v: f64| {
        if !(v.is_finite() && v > 0.0) {
            out.push(Violation {
                field,
                constraint: format!("must be finite and > 0 (got {v})"),
            });
        }
    };
    positive("cavity_length", params.cavity_length);
    positive("mirror_mass", params.mirror_mass);
    positive("mirror_freq", params.mirror_freq);
    positive("bath_temperature", params.bath_temperature);
    positive("cavity_decay", params.cavity_decay);
    positive("pump_wavelength", params.pump_wavelength);
    positive("bogoliubov_freq", params.bogoliubov_freq);
    match (params.quality_factor, params.mirror_damping) {
        (Some(q), None) => positive("quality_factor", q),
        (None, Some(g)) => positive("mirror_damping", g),
        (Some(_), Some(_)) => out.push(Violation {
            field: "quality_factor",
            constraint: "exactly one of quality_factor / mirror_damping may be given (both set)"
                .into(),
        }),
        (None, None) => out.push(Violation {
            field: "quality_factor",
            constraint: "exactly one of quality_factor / mirror_damping must be given (none set)"
                .into(),
        }),
    }
    if !(params.pump_power.is_finite() && params.pump_power >= 0.0) {
        out.push(Violation {
            field: "pump_power",
            constraint: format!("must be finite and >= 0 (got {})", params.pump_power),
        });
    }
    if !(params.atom_cavity_rate.is_finite() && params.atom_cavity_rate >= 0.0) {
        out.push(Violation {
            field: "atom_cavity_rate",
            constraint: format!("must be finite and >= 0 (got {})", params.atom_cavity_rate),
        });
    }
    if let Some(chi) = params.mirror_coupling_override {
        if !(chi.is_finite() && chi >= 0.0) {
            out.push(Violation {
                field: "mirror_coupling_override",
                constraint: format!("must be finite and >= 0 (got {chi})"),
            });
        }
    }
    if let Some(pull) = params.condensate_pull {
        if !pull.is_finite() {
            out.push(Violation {
                field: "condensate_pull",
                constraint: "must be finite".into(),
            });
        }
    }
    out
}

pub fn derive_couplings(params: &PhysicalParams) -> Result<DerivedCouplings> {
    if let Some(v) = validate(params).into_iter().next() {
        return Err(Error::invalid(v.field, v.constraint));
    }
    let omega_laser = TWO_PI * C_LIGHT / params.pump_wavelength;
    let omega_cavity = omega_laser;
    let chi = params
        .mirror_coupling_override
        .unwrap_or(omega_cavity / params.cavity_length);
    let eta = (2.0 * params.cavity_decay * params.pump_power / (HBAR * omega_laser)).sqrt();
    let x_zpf = (HBAR / (params.mirror_mass * params.mirror_freq)).sqrt();
    let p_zpf = (HBAR * params.mirror_mass * params.mirror_freq).sqrt();
    let gamma = match (params.quality_factor, params.mirror_damping) {
        (Some(q), None) => params.mirror_freq / q,
        (None, Some(g)) => g,
        _ => unreachable!("validated above"),
    };
    let energy_ratio = HBAR * params.mirror_freq / (K_B * params.bath_temperature);
    Ok(DerivedCouplings {
        omega_laser,
        omega_cavity,
        chi,
        eta,
        x_zpf,
        p_zpf,
        gamma,
        thermal_occupancy: 1.0 / energy_ratio.exp_m1(),
        classical_occupancy: 1.0 / energy_ratio,
    })
}

impl PhysicalParams {
    /// Reference opto-mechanical set: 2.5 cm cavity,
    /// 15 ng mirror at 275 kHz, Q = 1e5, 300 K, 1064 nm pump at 4 mW.
    /// The cavity decay is 2π × 5 MHz (see README, "Units").
    /// The Bogoliubov mode sits at the mirror frequency and is decoupled.
    pub fn reference() -> Self {
        let omega_m = TWO_PI * 275e3;
        PhysicalParams {
            cavity_length: 0.025,
            mirror_mass: 15e-12,
            mirror_freq: omega_m,
            quality_factor: Some(1e5),
            mirror_damping: None,
            bath_temperature: 300.0,
            cavity_decay: TWO_PI * 5e6,
            pump_wavelength: 1064e-9,
            pump_power: 4e-3,
            bogoliubov_freq: omega_m,
            atom_cavity_rate: 0.0,
            mirror_coupling_override: None,
            condensate_pull: None,
        }
    }

    /// Compressed desk-scale set for time-domain validation: Q = 100 and a
    /// bath temperature giving k_B T / ħω_m = 10, otherwise as [`Self::reference`].
    pub fn desk() -> Self {
        let base = Self::reference();
        PhysicalParams {
            quality_factor: Some(100.0),
            bath_temperature: 10.0 * HBAR * base.mirror_freq / K_B,
            ..base
        }
    }

    /// Flat `(key, value)` listing with unit-suffixed keys, for provenance headers.
    pub fn provenance(&self) -> Vec<(String, String)> {
        let mut rows = vec![
            ("cavity_length_m", fmt(self.cavity_length)),
            ("mirror_mass_kg", fmt(self.mirror_mass)),
            ("mirror_freq_rad_s", fmt(self.mirror_freq)),
        ];
        if let Some(q) = self.quality_factor {
            rows.push(("quality_factor", fmt(q)));
        }
        if let Some(g) = self.mirror_damping {
            rows.push(("mirror_damping_rad_s", fmt(g)));
        }
        rows.extend([
            ("bath_temperature_k", fmt(self.bath_temperature)),
            ("kappa_rad_s", fmt(self.cavity_decay)),
            ("pump_wavelength_m", fmt(self.pump_wavelength)),
            ("pump_power_w", fmt(self.pump_power)),
            ("bogoliubov_freq_rad_s", fmt(self.bogoliubov_freq)),
            ("zeta_rad_s", fmt(self.atom_cavity_rate)),
        ]);
        if let Some(chi) = self.mirror_coupling_override {
            rows.push(("mirror_coupling_rad_s_m", fmt(chi)));
        }
        if let Some(p) = self.condensate_pull {
            rows.push(("condensate_pull_rad_s", fmt(p)));
        }
        rows.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Parse a JSON config object. Unknown keys are rejected.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("malformed JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Config("top level must be a JSON object".into()))?;
        ConfigReader::new(obj).read()
    }
}

impl DerivedCouplings {
    pub fn provenance(&self) -> Vec<(String, String)> {
        [
            ("omega_cavity_rad_s", self.omega_cavity),
            ("chi_rad_s_m", self.chi),
            ("eta_rad_s", self.eta),
            ("x_zpf_m", self.x_zpf),
            ("p_zpf_kg_m_s", self.p_zpf),
            ("gamma_rad_s", self.gamma),
            ("thermal_occupancy", self.thermal_occupancy),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), fmt(v)))
        .collect()
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.15e}")
}

const SCALARS: &[&str] = &[
    "cavity_length_m",
    "mirror_mass_kg",
    "quality_factor",
    "bath_temperature_k",
    "pump_wavelength_m",
    "pump_power_w",
    "mirror_coupling_rad_s_m",
];
const RATES: &[&str] = &[
    "mirror_freq",
    "mirror_damping",
    "kappa",
    "bogoliubov_freq",
    "zeta",
    "condensate_pull",
];

struct ConfigReader<'a> {
    obj: &'a Map<String, Value>,
}

impl<'a> ConfigReader<'a> {
    fn new(obj: &'a Map<String, Value>) -> Self {
        ConfigReader { obj }
    }

    fn read(&self) -> Result<PhysicalParams> {
        for key in self.obj.keys() {
            let known = SCALARS.contains(&key.as_str())
                || RATES.iter().any(|r| {
                    key.strip_prefix(r)
                        .is_some_and(|rest| rest == "_hz" || rest == "_rad_s")
                });
            if !known {
                return Err(Error::Config(format!("unknown key `{key}`")));
            }
        }
        let quality_factor = self.scalar("quality_factor")?;
        let mirror_damping = self.rate("mirror_damping")?;
        if quality_factor.is_some() && mirror_damping.is_some() {
            return Err(Error::Config(
                "set exactly one of `quality_factor` / `mirror_damping_*`, not both".into(),
            ));
        }
        if quality_factor.is_none() && mirror_damping.is_none() {
            return Err(Error::Config(
                "missing key `quality_factor` (or `mirror_damping_hz` / `mirror_damping_rad_s`)"
                    .into(),
            ));
        }
        let params = PhysicalParams {
            cavity_length: self.required_scalar("cavity_length_m")?,
            mirror_mass: self.required_scalar("mirror_mass_kg")?,
            mirror_freq: self.required_rate("mirror_freq")?,
            quality_factor,
            mirror_damping,
            bath_temperature: self.required_scalar("bath_temperature_k")?,
            cavity_decay: self.required_rate("kappa")?,
            pump_wavelength: self.required_scalar("pump_wavelength_m")?,
            pump_power: self.required_scalar("pump_power_w")?,
            bogoliubov_freq: self.required_rate("bogoliubov_freq")?,
            atom_cavity_rate: self.required_rate("zeta")?,
            mirror_coupling_override: self.scalar("mirror_coupling_rad_s_m")?,
            condensate_pull: self.rate("condensate_pull")?,
        };
        if let Some(v) = validate(&params).into_iter().next() {
            return Err(Error::Config(format!("invalid value for {v}")));
        }
        Ok(params)
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        match self.obj.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| Error::Config(format!("key `{key}` must be a number"))),
        }
    }

    fn scalar(&self, key: &str) -> Result<Option<f64>> {
        self.number(key)
    }

    fn required_scalar(&self, key: &str) -> Result<f64> {
        self.scalar(key)?
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    fn rate(&self, stem: &str) -> Result<Option<f64>> {
        let hz = self.number(&format!("{stem}_hz"))?;
        let rad = self.number(&format!("{stem}_rad_s"))?;
        match (hz, rad) {
            (Some(_), Some(_)) => Err(Error::Config(format!(
                "both `{stem}_hz` and `{stem}_rad_s` are set; give exactly one"
            ))),
            (Some(f), None) => Ok(Some(TWO_PI * f)),
            (None, r) => Ok(r),
        }
    }

    fn required_rate(&self, stem: &str) -> Result<f64> {
        self.rate(stem)?
            .ok_or_else(|| Error::Config(format!("missing key `{stem}_hz` (or `{stem}_rad_s`)")))
    }
}

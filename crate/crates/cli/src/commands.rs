use std::fmt;
use std::path::Path;

use optomech_core::dynamics::dump_csv;
use optomech_core::spectra::zero_detuning_reference;
use optomech_core::steadystate::{bare_detuning, Branch};
use optomech_core::validate::{cross_check, CrossCheckOptions, CrossCheckReport, TimeDomainConfig};
use optomech_core::{
    build_diffusion_matrix, build_drift_matrix, derive_couplings, driven_stability,
    operating_point_at_detuning, radiation_pressure_constant, solve_self_consistent,
    spectrum_series, stability, temperature_sweep, BathModel, BranchSet, DerivedCouplings, Error,
    Integration, MomentumMode, NoiseModel, Observable, PhysicalParams, SpectrumEngine,
    SpectrumUnits, Stability, SweepSpec, SweepVariable, TemperatureCurve,
};

use crate::args::{
    BathArg, Cli, Command, DeriveArgs, DumpArgs, Fix, Layout, MapKind, Overrides, Preset,
    SpectrumArgs, SteadyArgs, SweepArg, TemperatureArgs, ValidateArgs, ZetaUnit,
};
use crate::output::{write_raw, write_table, Header};

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Validation(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Validation(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::Validation(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidParameter { .. }
            | Error::Config(_)
            | Error::UnsupportedCombination(_) => Failure::Config(msg),
            Error::ModelMismatch { .. } => Failure::Validation(msg),
            _ => Failure::Numerical(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("cannot write output: {e}"))
    }
}

type Outcome = Result<(), Failure>;

pub fn run(cli: &Cli, command: &str) -> Outcome {
    match &cli.command {
        Command::Derive(a) => derive(cli, command, a),
        Command::Steady(a) => steady(cli, command, a),
        Command::Spectrum(a) => spectrum(cli, command, a),
        Command::Temperature(a) => temperature(cli, command, a),
        Command::Validate(a) => validate(cli, command, a),
        Command::DumpMatrix(a) => dump_matrix(cli, command, a),
    }
}

fn load_base(config: Option<&Path>, preset: Preset) -> Result<PhysicalParams, Failure> {
    match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            Ok(PhysicalParams::from_json_str(&text)?)
        }
        None => Ok(match preset {
            Preset::Reference => PhysicalParams::reference(),
            Preset::Desk => PhysicalParams::desk(),
        }),
    }
}

/// Apply the overrides in order χ, ω̃, ζ (the mirror-rate unit refers to the final χ).
fn apply(
    base: PhysicalParams,
    o: &Overrides,
) -> Result<(PhysicalParams, DerivedCouplings), Failure> {
    let mut p = base;
    if let Some(k) = o.chi_scale {
        if !(k.is_finite() && k >= 0.0) {
            return Err(Failure::Config(format!(
                "--chi-scale must be finite and >= 0 (got {k})"
            )));
        }
        let c = derive_couplings(&p)?;
        p.mirror_coupling_override = Some(k * c.omega_cavity / (2.0 * p.cavity_length));
    }
    if let Some(w) = o.omega_tilde {
        p.bogoliubov_freq = w * p.mirror_freq;
    }
    if let Some(z) = o.zeta {
        let c = derive_couplings(&p)?;
        p.atom_cavity_rate = zeta_in_rad_s(z, o.zeta_unit, &c);
    }
    let c = derive_couplings(&p)?;
    Ok((p, c))
}

fn zeta_in_rad_s(value: f64, unit: ZetaUnit, c: &DerivedCouplings) -> f64 {
    match unit {
        ZetaUnit::RadS => value,
        ZetaUnit::Hz => std::f64::consts::TAU * value,
        ZetaUnit::MirrorRate => value * c.mirror_rate(),
    }
}

fn base_header(command: &str, p: &PhysicalParams, c: &DerivedCouplings) -> Header {
    let mut h = Header::new(command);
    h.extend("param.", p.provenance());
    h.extend("derived.", c.provenance());
    h.push(
        "derived.mirror_rate_rad_s",
        format!("{:.15e}", c.mirror_rate()),
    );
    h
}

fn modes(h: &mut Header, noise: NoiseModel, momentum: MomentumMode) {
    h.push("noise", noise.as_str());
    h.push("momentum", momentum.as_str());
}

fn fixed_delta(fixes: &[Fix], kappa: f64) -> f64 {
    fixes
        .iter()
        .rev()
        .find(|f| f.name == "delta")
        .map_or(0.5, |f| f.value)
        * kappa
}

fn e15(v: f64) -> String {
    format!("{v:.15e}")
}

fn e12(v: f64) -> String {
    format!("{v:.12e}")
}

fn derive(cli: &Cli, command: &str, a: &DeriveArgs) -> Outcome {
    let (p, c) = apply(
        load_base(cli.config.as_deref(), Preset::Reference)?,
        &a.overrides,
    )?;
    let header = base_header(command, &p, &c);
    let mut rows: Vec<String> = c
        .provenance()
        .into_iter()
        .map(|(k, v)| format!("{k},{v}"))
        .collect();
    rows.push(format!("omega_laser_rad_s,{}", e15(c.omega_laser)));
    rows.push(format!(
        "classical_occupancy,{}",
        e15(c.classical_occupancy)
    ));
    rows.push(format!("mirror_rate_rad_s,{}", e15(c.mirror_rate())));
    rows.push(format!(
        "radiation_pressure_constant_s_rad,{}",
        e15(radiation_pressure_constant(&p, &c)?)
    ));
    write_table(cli.out.as_deref(), &header, "quantity,value", &rows)?;
    Ok(())
}

fn steady(cli: &Cli, command: &str, a: &SteadyArgs) -> Outcome {
    let (p, c) = apply(
        load_base(cli.config.as_deref(), Preset::Reference)?,
        &a.overrides,
    )?;
    let kappa = p.cavity_decay;
    let mut header = base_header(command, &p, &c);
    let mut rows = Vec::new();
    match (&a.delta0, a.delta) {
        (Some(grid), _) => {
            header.push("delta0_unit", "kappa");
            for d0 in grid.values() {
                rows.extend(solve_self_consistent(d0 * kappa, &p, &c)?.csv_rows());
            }
        }
        (None, delta) => {
            let delta = delta.unwrap_or(0.5) * kappa;
            let point = operating_point_at_detuning(delta, &p, &c);
            let k = build_drift_matrix(&point, &p, &c);
            let set = BranchSet {
                delta0: bare_detuning(delta, &p, &c)?,
                branches: vec![Branch {
                    point,
                    stability: stability(&k)?.class,
                }],
            };
            header.extend("", point.provenance());
            rows = set.csv_rows();
        }
    }
    header.note("all detunings in rad/s");
    write_table(cli.out.as_deref(), &header, BranchSet::CSV_HEADER, &rows)?;
    Ok(())
}

fn spectrum(cli: &Cli, command: &str, a: &SpectrumArgs) -> Outcome {
    let observable: Observable = a.observable.parse().map_err(|e: Error| Failure::from(e))?;
    let (p, c) = apply(
        load_base(cli.config.as_deref(), Preset::Reference)?,
        &a.overrides,
    )?;
    let noise = NoiseModel::from(cli.noise);
    let momentum = MomentumMode::from(cli.momentum);
    let units = if a.si {
        SpectrumUnits::Si
    } else {
        SpectrumUnits::ZeroPoint
    };
    let kappa = p.cavity_decay;
    let omega: Vec<f64> = a.omega.values().iter().map(|w| w * p.mirror_freq).collect();
    if omega.iter().any(|w| *w < 0.0) {
        return Err(Failure::Config(
            "frequency grid must be non-negative".into(),
        ));
    }
    let normalization = if a.normalize {
        Some(zero_detuning_reference(
            observable, &p, &c, noise, momentum, units,
        )?)
    } else {
        None
    };

    let mut header = base_header(command, &p, &c);
    modes(&mut header, noise, momentum);
    header.push("observable", observable.symbol());
    header.push("units", units.label(observable));
    match normalization {
        Some(n) => {
            header.push("normalization_mode", "zero-detuning-at-omega-m");
            header.push("normalization", e15(n));
        }
        None => header.push("normalization_mode", "none"),
    }

    // Column sets: (y value, params at that y, total detuning).
    let (y_name, columns): (Option<&str>, Vec<(f64, PhysicalParams, f64)>) = match a.map {
        None => {
            let delta = fixed_delta(&a.fix, kappa);
            header.push("delta_rad_s", e15(delta));
            (None, vec![(delta, p.clone(), delta)])
        }
        Some(MapKind::OmegaDelta) => {
            let cols = a
                .delta_grid
                .values()
                .into_iter()
                .map(|d| (d * kappa, p.clone(), d * kappa))
                .collect();
            (Some("delta_rad_s"), cols)
        }
        Some(MapKind::OmegaZeta) => {
            let delta = fixed_delta(&a.fix, kappa);
            header.push("delta_rad_s", e15(delta));
            let cols = a
                .zeta_grid
                .values()
                .into_iter()
                .map(|z| {
                    let zeta = zeta_in_rad_s(z, a.overrides.zeta_unit, &c);
                    (
                        zeta,
                        PhysicalParams {
                            atom_cavity_rate: zeta,
                            ..p.clone()
                        },
                        delta,
                    )
                })
                .collect();
            (Some("zeta_rad_s"), cols)
        }
    };
    if y_name.is_some() {
        header.note("unstable operating points are written as nan");
    }

    let mut label = format!("S_{}", observable.symbol());
    let mut values = Vec::with_capacity(columns.len());
    for (_, params, delta) in &columns {
        let couplings = derive_couplings(params)?;
        let op = operating_point_at_detuning(*delta, params, &couplings);
        let k = build_drift_matrix(&op, params, &couplings);
        if driven_stability(&k)? != Stability::Stable {
            values.push(vec![f64::NAN; omega.len()]);
            continue;
        }
        let engine = SpectrumEngine::new(k, params, &couplings, noise, momentum);
        let series = spectrum_series(
            &engine,
            observable,
            &omega,
            units,
            &couplings,
            normalization,
        )?;
        label = series.value_label();
        values.push(series.values);
    }

    let (columns_line, rows) = match (y_name, a.layout) {
        (None, _) => (
            format!("omega_rad_s,{label}"),
            omega
                .iter()
                .zip(&values[0])
                .map(|(w, s)| format!("{},{}", e12(*w), e12(*s)))
                .collect(),
        ),
        (Some(y), Layout::Long) => {
            let mut rows = Vec::with_capacity(omega.len() * columns.len());
            for ((yv, _, _), col) in columns.iter().zip(&values) {
                for (w, s) in omega.iter().zip(col) {
                    rows.push(format!("{},{},{}", e12(*w), e12(*yv), e12(*s)));
                }
            }
            (format!("omega_rad_s,{y},{label}"), rows)
        }
        (Some(y), Layout::Matrix) => {
            header.note(&format!(
                "columns after omega_rad_s are {label} at the listed {y} values"
            ));
            let head = std::iter::once("omega_rad_s".to_string())
                .chain(columns.iter().map(|(yv, _, _)| e12(*yv)))
                .collect::<Vec<_>>()
                .join(",");
            let rows = omega
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    std::iter::once(e12(*w))
                        .chain(values.iter().map(|col| e12(col[i])))
                        .collect::<Vec<_>>()
                        .join(",")
                })
                .collect();
            (head, rows)
        }
    };
    write_table(cli.out.as_deref(), &header, &columns_line, &rows)?;
    Ok(())
}

fn temperature(cli: &Cli, command: &str, a: &TemperatureArgs) -> Outcome {
    let (p, c) = apply(
        load_base(cli.config.as_deref(), Preset::Reference)?,
        &a.overrides,
    )?;
    let noise = NoiseModel::from(cli.noise);
    let momentum = MomentumMode::from(cli.momentum);
    let kappa = p.cavity_decay;
    let grid = a.range.values();
    let (variable, values, unit) = match a.sweep {
        SweepArg::Delta => (
            SweepVariable::Delta,
            grid.iter().map(|d| d * kappa).collect(),
            "delta_rad_s",
        ),
        SweepArg::Zeta => (
            SweepVariable::Zeta,
            grid.iter()
                .map(|z| zeta_in_rad_s(*z, a.overrides.zeta_unit, &c))
                .collect(),
            "zeta_rad_s",
        ),
        SweepArg::OmegaTilde => (
            SweepVariable::OmegaTilde,
            grid.iter().map(|w| w * p.mirror_freq).collect(),
            "omega_tilde_rad_s",
        ),
    };
    if !(a.rel_tol > 0.0 && a.rel_tol < 1.0) {
        return Err(Failure::Config("--rel-tol must lie in (0, 1)".into()));
    }
    let spec = SweepSpec {
        variable,
        values,
        delta: fixed_delta(&a.fix, kappa),
    };
    let integration = Integration {
        rel_tol: a.rel_tol,
        ..Integration::default()
    };
    let curve = temperature_sweep(&spec, &p, noise, momentum, integration)?;

    let mut header = base_header(command, &p, &c);
    modes(&mut header, noise, momentum);
    header.push("sweep", variable.as_str());
    header.push("sweep_value_unit", unit);
    if variable != SweepVariable::Delta {
        header.push("delta_rad_s", e15(spec.delta));
    }
    header.push("integration_rel_tol", format!("{:e}", a.rel_tol));
    header.note("variances in zero-point units; unstable points leave the value columns empty");
    write_table(
        cli.out.as_deref(),
        &header,
        TemperatureCurve::CSV_HEADER,
        &curve.csv_rows(),
    )?;
    Ok(())
}

fn validate(cli: &Cli, command: &str, a: &ValidateArgs) -> Outcome {
    let (p, c) = apply(load_base(cli.config.as_deref(), a.preset)?, &a.overrides)?;
    let kappa = p.cavity_decay;
    let delta = a.delta * kappa;
    let time_domain = (!a.no_time_domain).then_some(TimeDomainConfig {
        dt: a.dt / kappa,
        t_end: a.t_end,
        seed: cli.seed,
        batches: a.batches,
    });
    let opts = CrossCheckOptions {
        spectral_tolerance: a.tolerance,
        sigma: a.sigma,
        time_domain,
        negative_control: a.negative_control,
        ..CrossCheckOptions::default()
    };
    let report = cross_check(&p, delta, &opts)?;

    let mut header = base_header(command, &p, &c);
    modes(&mut header, NoiseModel::HighTWhite, MomentumMode::Exact);
    header.push("delta_rad_s", e15(delta));
    if let Some(td) = &time_domain {
        header.push("td.dt_s", e15(td.dt));
        header.push("td.t_end_s", e15(td.t_end));
        header.push("td.seed", td.seed.to_string());
        header.push("td.batches", td.batches.to_string());
    }
    if a.negative_control {
        header.push("negative_control", "true");
    }
    eprint!("{}", report.table());
    write_table(
        cli.out.as_deref(),
        &header,
        CrossCheckReport::CSV_HEADER,
        &report.csv_rows(),
    )?;
    if report.passed() {
        Ok(())
    } else {
        let failed = report.rows.iter().filter(|r| !r.pass).count();
        Err(Failure::Validation(format!(
            "{failed} of {} checks failed",
            report.rows.len()
        )))
    }
}

fn dump_matrix(cli: &Cli, command: &str, a: &DumpArgs) -> Outcome {
    let (p, c) = apply(
        load_base(cli.config.as_deref(), Preset::Reference)?,
        &a.overrides,
    )?;
    let delta = a.delta * p.cavity_decay;
    let op = operating_point_at_detuning(delta, &p, &c);
    let k = build_drift_matrix(&op, &p, &c);
    let bath = match a.bath {
        BathArg::HighTWhite => BathModel::HighTWhite,
        BathArg::QuantumExact => BathModel::QuantumExact,
    };
    let d = build_diffusion_matrix(&p, &c, bath);
    let mut header = base_header(command, &p, &c);
    header.extend("", op.provenance());
    header.push("stability", stability(&k)?.class.as_str());
    write_raw(cli.out.as_deref(), &header, &dump_csv(&k, &d))?;
    Ok(())
}

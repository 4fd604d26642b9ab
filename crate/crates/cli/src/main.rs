//! Command line surface: exact field/unit reports, bundle topology,
//! series evaluation, Harper spectra and gap labels, butterfly datasets,
//! orbit tables, and the verification suites. Machine formats first: every
//! JSON document carries the resolved configuration, every CSV starts with
//! a `# config:` line followed by a header row, and identical flags produce
//! byte-identical output.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use solvtorus_core::checks;
use solvtorus_core::error::Error;
use solvtorus_core::harper::{
    butterfly, gap_labels, solv_spectrum, torus_spectrum, write_butterfly_csv, Flux, GapLabel,
    LabelModule, SpectrumResult, LABEL_CAP,
};
use solvtorus_core::hp::{self, Precision, DEFAULT_DECIMAL_DIGITS};
use solvtorus_core::lattice::{enumerate_orbits, FUNDAMENTAL_DOMAIN};
use solvtorus_core::ncalgebra::cocycle::FluxValue;
use solvtorus_core::quadfield::{parse_theta_spec, FieldElement, UnitSystem};
use solvtorus_core::spectra;
use solvtorus_core::topology;

/// Environment variable holding the default precision in decimal digits.
const DIGITS_ENV: &str = "SOLVTORUS_DIGITS";

#[derive(Parser)]
#[command(
    name = "solvtorus",
    version,
    about = "Unit actions of real quadratic fields, torus-bundle topology, twisted group algebras, Harper spectra and their L-series"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// Output format
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write output to a file instead of stdout
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Working precision in decimal digits (default: $SOLVTORUS_DIGITS or 50)
    #[arg(long)]
    digits: Option<u32>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Field report: theta, fundamental totally positive unit, its matrix,
    /// embeddings and continued fraction
    Field {
        /// squarefree integer d >= 2
        d: u64,
        /// lattice generator as "a,b,c" for theta = (a + b*sqrt(d))/c
        #[arg(long)]
        theta: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Homology, K-theory and the trace range of the bundle algebra
    Topology {
        d: u64,
        #[arg(long)]
        theta: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Orbit representatives with |N| <= bound as CSV
    Orbits {
        d: u64,
        #[arg(long)]
        theta: Option<String>,
        /// norm bound B > 0
        #[arg(short = 'B', long, default_value_t = 10.0)]
        bound: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Series evaluation: L (signed norm series), Z (unit zeta), eta,
    /// zeta (unsigned), residue, heat, modes
    Series {
        d: u64,
        #[arg(long)]
        theta: Option<String>,
        #[arg(long, value_parser = ["L", "Z", "eta", "zeta", "residue", "heat", "modes"])]
        which: String,
        /// series exponent
        #[arg(short, default_value_t = 4.0)]
        s: f64,
        /// norm bound for orbit sums
        #[arg(short = 'B', long, default_value_t = 50.0)]
        bound: f64,
        /// symmetric unit-exponent cutoff
        #[arg(short = 'K', long, default_value_t = 60)]
        k: u64,
        /// heat parameter t > 0
        #[arg(short, long, default_value_t = 1.0)]
        t: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Harper spectrum: rational-flux torus Bloch family, or the
    /// six-generator operator of the semidirect lattice
    Harper {
        /// rational flux p/q (torus operator)
        #[arg(long, conflicts_with = "solv")]
        flux: Option<String>,
        /// squarefree d (semidirect operator)
        #[arg(long)]
        solv: Option<u64>,
        /// momentum grid per axis (torus)
        #[arg(long, default_value_t = 32)]
        grid: u32,
        /// box radius for n, m (semidirect)
        #[arg(short = 'R', long, default_value_t = 8)]
        r: i64,
        /// box radius for the unit exponent (semidirect)
        #[arg(short = 'K', long, default_value_t = 1)]
        kc: i64,
        /// flux parameter for the semidirect cocycle
        /// (default: the trace-range generator theta*(theta'-theta)^{-1})
        #[arg(long)]
        u: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Band dataset over all reduced fluxes with q <= q_max (CSV)
    Butterfly {
        q_max: u64,
        #[arg(long, default_value_t = 16)]
        grid: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Verification suites: cocycle, rep, krein or all
    Check {
        d: u64,
        #[arg(long, value_parser = ["cocycle", "rep", "krein", "all"])]
        suite: String,
        #[arg(long, default_value_t = 1000)]
        trials: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    // single-threaded spectral kernels keep runs byte-reproducible
    faer::set_global_parallelism(faer::Parallelism::None);
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn digits_from(common: &Common) -> u32 {
    common
        .digits
        .or_else(|| std::env::var(DIGITS_ENV).ok().and_then(|v| v.parse().ok()))
        .unwrap_or(DEFAULT_DECIMAL_DIGITS)
}

fn theta_for(d: u64, spec: &Option<String>) -> Result<UnitSystem, Error> {
    match spec {
        None => UnitSystem::new(d),
        Some(s) => {
            let (a, b, c) = parse_theta_spec(s)?;
            UnitSystem::with_theta(FieldElement::new(a, b, c, d)?)
        }
    }
}

fn field_json(x: &FieldElement) -> Value {
    json!({
        "a": x.coeff_a().to_string(),
        "b": x.coeff_b().to_string(),
        "c": x.coeff_c().to_string(),
        "d": x.d(),
        "embedding1": x.to_f64_embedding1(),
        "embedding2": x.to_f64_embedding2(),
    })
}

fn emit(common: &Common, text: String) -> Result<(), Error> {
    match &common.output {
        None => {
            print!("{text}");
            std::io::stdout().flush().ok();
        }
        Some(path) => {
            std::fs::write(path, text)
                .map_err(|e| Error::InvalidParameter(format!("cannot write output: {e}")))?;
        }
    }
    Ok(())
}

fn render_json(doc: &Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("serializable");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.cmd {
        Cmd::Field { d, theta, common } => cmd_field(d, &theta, &common),
        Cmd::Topology { d, theta, common } => cmd_topology(d, &theta, &common),
        Cmd::Orbits { d, theta, bound, common } => cmd_orbits(d, &theta, bound, &common),
        Cmd::Series { d, theta, which, s, bound, k, t, common } => {
            cmd_series(d, &theta, &which, s, bound, k, t, &common)
        }
        Cmd::Harper { flux, solv, grid, r, kc, u, common } => {
            cmd_harper(&flux, solv, grid, r, kc, u, &common)
        }
        Cmd::Butterfly { q_max, grid, common } => cmd_butterfly(q_max, grid, &common),
        Cmd::Check { d, suite, trials, seed, common } => {
            cmd_check(d, &suite, trials, seed, &common)
        }
    }
}

fn cmd_field(d: u64, theta: &Option<String>, common: &Common) -> Result<(), Error> {
    let us = theta_for(d, theta)?;
    let config = json!({
        "command": "field",
        "d": d,
        "theta": theta.clone().unwrap_or_else(|| "default".to_string()),
        "format": fmt_name(common.format),
    });
    let cf = us.continued_fraction();
    let phi = us.phi();
    let doc = json!({
        "config": config,
        "d": d,
        "theta": field_json(us.theta()),
        "epsilon": field_json(us.epsilon()),
        "epsilon_norm": us.epsilon().norm().to_string(),
        "epsilon_trace": us.epsilon().trace().to_string(),
        "phi": [[phi.m[0][0].to_string(), phi.m[0][1].to_string()],
                 [phi.m[1][0].to_string(), phi.m[1][1].to_string()]],
        "det_phi": phi.det().to_string(),
        "continued_fraction": {
            "preperiod": cf.preperiod.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
            "period": cf.period.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        },
        "fixed_points_ok": us.fixed_points_check(),
        "log_epsilon": us.log_epsilon(),
    });
    match common.format {
        Format::Json => emit(common, render_json(&doc)),
        Format::Csv => Err(Error::InvalidParameter(
            "field has no CSV representation; use --format json or text".into(),
        )),
        Format::Text => {
            let mut s = String::new();
            s += &format!("config: {}\n", serde_json::to_string(&config).unwrap());
            s += &format!("theta   = {} = {:.15}\n", us.theta(), us.theta_f64());
            s += &format!(
                "epsilon = {} = {:.15} (norm {}, trace {})\n",
                us.epsilon(),
                us.epsilon_f64(),
                us.epsilon().norm(),
                us.epsilon().trace()
            );
            s += &format!(
                "phi     = [[{}, {}], [{}, {}]], det = {}\n",
                phi.m[0][0],
                phi.m[0][1],
                phi.m[1][0],
                phi.m[1][1],
                phi.det()
            );
            s += &format!(
                "cf      = preperiod {:?}, period {:?}\n",
                cf.preperiod.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                cf.period.iter().map(|x| x.to_string()).collect::<Vec<_>>()
            );
            s += &format!("fixed points fixed by phi: {}\n", us.fixed_points_check());
            emit(common, s)
        }
    }
}

fn cmd_topology(d: u64, theta: &Option<String>, common: &Common) -> Result<(), Error> {
    let us = theta_for(d, theta)?;
    let report = topology::report(&us)?;
    let config = json!({
        "command": "topology",
        "d": d,
        "theta": theta.clone().unwrap_or_else(|| "default".to_string()),
        "format": fmt_name(common.format),
    });
    let mut doc = serde_json::to_value(&report).expect("serializable");
    doc.as_object_mut().unwrap().insert("config".into(), config.clone());
    match common.format {
        Format::Json => emit(common, render_json(&doc)),
        Format::Csv => Err(Error::InvalidParameter(
            "topology has no CSV representation; use --format json or text".into(),
        )),
        Format::Text => {
            let mut s = String::new();
            s += &format!("config: {}\n", serde_json::to_string(&config).unwrap());
            for (i, h) in report.h.iter().enumerate() {
                s += &format!("H{i} = {}\n", h.describe());
            }
            s += &format!("K0 = {}\n", report.k0.describe());
            s += &format!("K1 = {}\n", report.k1.describe());
            s += &format!("K-theory matches cohomology: {}\n", report.matches_cohomology);
            s += &format!("|Coker(1 - phi)| = {}\n", report.coker_order);
            s += &format!(
                "trace range generator u = ({} + {}*sqrt({}))/{} = {:.15} (irrational: {})\n",
                report.trace_range_u.num_a,
                report.trace_range_u.num_b,
                d,
                report.trace_range_u.den,
                report.trace_range_u.value,
                report.trace_range_u.irrational
            );
            emit(common, s)
        }
    }
}

fn cmd_orbits(d: u64, theta: &Option<String>, bound: f64, common: &Common) -> Result<(), Error> {
    if !(bound > 0.0) {
        return Err(Error::InvalidParameter("bound must be positive".into()));
    }
    let us = theta_for(d, theta)?;
    let b = rational_from_f64(bound)?;
    let table = enumerate_orbits(&us, &b)?;
    let config = json!({
        "command": "orbits",
        "d": d,
        "theta": theta.clone().unwrap_or_else(|| "default".to_string()),
        "bound": bound,
        "fundamental_domain": FUNDAMENTAL_DOMAIN,
        "orientation": "right-open in the unit direction",
    });
    let mut buf = Vec::new();
    writeln!(buf, "# config: {}", serde_json::to_string(&config).unwrap()).ok();
    table
        .write_csv(&us, &mut buf)
        .map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
    emit(common, String::from_utf8(buf).expect("utf8"))
}

fn rational_from_f64(x: f64) -> Result<dashu::rational::RBig, Error> {
    dashu::rational::RBig::try_from(x)
        .map_err(|_| Error::InvalidParameter(format!("not a finite number: {x}")))
}

#[allow(clippy::too_many_arguments)]
fn cmd_series(
    d: u64,
    theta: &Option<String>,
    which: &str,
    s: f64,
    bound: f64,
    k: u64,
    t: f64,
    common: &Common,
) -> Result<(), Error> {
    let us = theta_for(d, theta)?;
    let digits = digits_from(common);
    let p = Precision::decimal_digits(digits);
    let config = json!({
        "command": "series",
        "which": which,
        "d": d,
        "theta": theta.clone().unwrap_or_else(|| "default".to_string()),
        "s": s,
        "B": bound,
        "K": k,
        "t": t,
        "digits": digits,
        "format": fmt_name(common.format),
    });
    let b = rational_from_f64(bound)?;

    let doc = match which {
        "L" => {
            let table = enumerate_orbits(&us, &b)?;
            let v = spectra::shimizu_l_partial(&us, &table, s, p);
            json!({
                "config": config,
                "which": "L",
                "value": v.value_f64(),
                "value_decimal": decimal_string(&v.value, digits),
                "terms": v.terms,
                "B": bound,
                "warning": v.warning,
            })
        }
        "Z" => {
            let v = spectra::z_epsilon(&us, s, k, p)?;
            json!({
                "config": config,
                "which": "Z",
                "value": v.value_f64(),
                "value_decimal": decimal_string(&v.value, digits),
                "K": k,
                "tail_bound": v.tail_bound_f64(),
                "terms": v.terms,
                "warning": v.warning,
            })
        }
        "eta" => {
            let table = enumerate_orbits(&us, &b)?;
            let e = spectra::eta(&us, &table, k, s, p)?;
            json!({
                "config": config,
                "which": "eta",
                "double_sum": hp::to_f64(&e.double_sum),
                "product": hp::to_f64(&e.product),
                "difference": e.difference_f64(),
                "difference_hp": hp::to_f64(&e.difference_hp()),
                "l_factor": hp::to_f64(&e.l_factor),
                "z_factor": hp::to_f64(&e.z_factor),
                "terms": e.terms,
                "B": bound,
                "K": k,
            })
        }
        "zeta" => {
            let table = enumerate_orbits(&us, &b)?;
            let (direct, factored) = spectra::zeta_both_branches(&us, &table, k, s, p)?;
            json!({
                "config": config,
                "which": "zeta",
                "direct": hp::to_f64(&direct),
                "factored": hp::to_f64(&factored),
                "difference": hp::to_f64(&direct) - hp::to_f64(&factored),
                "B": bound,
                "K": k,
            })
        }
        "residue" => {
            let r = spectra::residue_estimate(&us, p);
            json!({
                "config": config,
                "which": "residue",
                "estimate": r.estimate,
                "target_inverse_log_epsilon": r.target,
                "deviation": r.deviation,
                "samples": r.samples,
                "note": r.l_factor_note,
            })
        }
        "heat" => {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter("heat parameter t must be positive".into()));
            }
            let h = spectra::heat_h(&us, t, p);
            let functional = spectra::heat_functional_check(&us, t, p);
            let slope = spectra::heat_log_slope(&us, 1e-6, 1e-3, p);
            json!({
                "config": config,
                "which": "heat",
                "t": t,
                "value": hp::to_f64(&h),
                "value_decimal": decimal_string(&h, digits),
                "functional_deviation": functional,
                "log_slope_small_t": slope,
                "half_inverse_log_epsilon": 1.0 / (2.0 * us.log_epsilon()),
                "constant_estimate": spectra::heat_constant_estimate(&us, p),
            })
        }
        "modes" => {
            let table = enumerate_orbits(&us, &b)?;
            let modes = spectra::dirac_modes(&us, &table, k, p)?;
            let config_line = serde_json::to_string(&config).unwrap();
            let mut buf = Vec::new();
            writeln!(buf, "# config: {config_line}").ok();
            spectra::write_modes_csv(&modes, &mut buf)
                .map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
            return emit(common, String::from_utf8(buf).expect("utf8"));
        }
        other => {
            return Err(Error::InvalidParameter(format!("unknown series kind {other:?}")));
        }
    };

    match common.format {
        Format::Json => emit(common, render_json(&doc)),
        Format::Csv => Err(Error::InvalidParameter(
            "this series kind has no CSV; use --which modes or --format json".into(),
        )),
        Format::Text => {
            let mut out = String::new();
            out += &format!("config: {}\n", serde_json::to_string(&config).unwrap());
            let obj = doc.as_object().unwrap();
            for (key, val) in obj {
                if key == "config" {
                    continue;
                }
                out += &format!("{key} = {val}\n");
            }
            emit(common, out)
        }
    }
}

fn decimal_string(x: &hp::Real, digits: u32) -> String {
    let dec = x.to_decimal().value().with_precision(digits as usize);
    dec.value().to_string()
}

fn spectrum_json(spec: &SpectrumResult, labels: &[GapLabel]) -> Value {
    json!({
        "bands": spec.bands,
        "gaps": spec.gaps.iter().zip(labels).map(|(g, l)| json!({
            "lo": g.lo,
            "hi": g.hi,
            "ids": g.ids,
            "ids_count": g.ids_count,
            "label": {"p": l.label_p, "q": l.label_q},
            "residual": l.residual,
        })).collect::<Vec<_>>(),
        "eigenvalue_count": spec.eigenvalues.len(),
        "trusted_count": spec.trusted_count(),
        "untrusted_count": spec.untrusted_count(),
        "hermiticity_defect": spec.hermiticity_defect,
        "spectral_radius_bound": spec.generator_count,
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_harper(
    flux: &Option<String>,
    solv: Option<u64>,
    grid: u32,
    r: i64,
    kc: i64,
    u: Option<f64>,
    common: &Common,
) -> Result<(), Error> {
    let (config, spec, labels, extra): (Value, SpectrumResult, Vec<GapLabel>, Value) =
        match (flux, solv) {
            (Some(fx), None) => {
                let flux = Flux::from_str(fx)?;
                let spec = torus_spectrum(flux, grid)?;
                let labels = gap_labels(&spec, LabelModule::Theta(flux.value()), LABEL_CAP);
                let config = json!({
                    "command": "harper",
                    "kind": "torus",
                    "flux": fx,
                    "grid": grid,
                    "format": fmt_name(common.format),
                });
                let extra = json!({
                    "kind": "torus",
                    "flux": {"p": flux.p, "q": flux.q},
                    "truncation": {"G": grid},
                    "label_module": "Z + Z*flux mod 1",
                });
                (config, spec, labels, extra)
            }
            (None, Some(d)) => {
                let us = UnitSystem::new(d)?;
                let tr = topology::trace_range(&us)?;
                let flux_u = u.unwrap_or_else(|| tr.u_f64());
                let spec = solv_spectrum(&us, FluxValue::Real(flux_u), r, kc, None)?;
                let labels = gap_labels(&spec, LabelModule::TraceU(tr.u_f64()), LABEL_CAP);
                let config = json!({
                    "command": "harper",
                    "kind": "solv",
                    "d": d,
                    "R": r,
                    "Kc": kc,
                    "u": flux_u,
                    "format": fmt_name(common.format),
                });
                let extra = json!({
                    "kind": "solv",
                    "d": d,
                    "u": flux_u,
                    "truncation": {"R": r, "Kc": kc},
                    "label_module": "Z + Z*u mod 1 (reported, not asserted)",
                });
                (config, spec, labels, extra)
            }
            _ => {
                return Err(Error::InvalidParameter(
                    "exactly one of --flux p/q or --solv d is required".into(),
                ))
            }
        };

    let mut doc = spectrum_json(&spec, &labels);
    let obj = doc.as_object_mut().unwrap();
    obj.insert("config".into(), config.clone());
    for (key, v) in extra.as_object().unwrap() {
        obj.insert(key.clone(), v.clone());
    }
    match common.format {
        Format::Json => emit(common, render_json(&doc)),
        Format::Csv => Err(Error::InvalidParameter(
            "harper has no CSV; use butterfly for the CSV dataset".into(),
        )),
        Format::Text => {
            let mut s = String::new();
            s += &format!("config: {}\n", serde_json::to_string(&config).unwrap());
            s += &format!("bands ({}):\n", spec.bands.len());
            for b in &spec.bands {
                s += &format!("  [{:.6}, {:.6}]\n", b.lo, b.hi);
            }
            s += &format!("gaps ({}):\n", spec.gaps.len());
            for (g, l) in spec.gaps.iter().zip(&labels) {
                s += &format!(
                    "  ({:.6}, {:.6})  ids = {:.6} = {}/{}  label (p,q) = ({},{})  residual {:.3e}\n",
                    g.lo, g.hi, g.ids, g.ids_count.0, g.ids_count.1, l.label_p, l.label_q, l.residual
                );
            }
            s += &format!(
                "eigenvalues: {} (untrusted: {}), hermiticity defect {:.3e}\n",
                spec.eigenvalues.len(),
                spec.untrusted_count(),
                spec.hermiticity_defect
            );
            emit(common, s)
        }
    }
}

fn cmd_butterfly(q_max: u64, grid: u32, common: &Common) -> Result<(), Error> {
    let rows = butterfly(q_max, grid)?;
    let config = json!({
        "command": "butterfly",
        "q_max": q_max,
        "grid": grid,
    });
    let mut buf = Vec::new();
    writeln!(buf, "# config: {}", serde_json::to_string(&config).unwrap()).ok();
    write_butterfly_csv(&rows, &mut buf)
        .map_err(|e| Error::InvalidParameter(format!("csv: {e}")))?;
    emit(common, String::from_utf8(buf).expect("utf8"))
}

fn cmd_check(d: u64, suite: &str, trials: u32, seed: u64, common: &Common) -> Result<(), Error> {
    let reports = checks::run_suite(suite, d, trials, seed)?;
    let config = json!({
        "command": "check",
        "d": d,
        "suite": suite,
        "trials": trials,
        "seed": seed,
        "format": fmt_name(common.format),
    });
    let all_passed = reports.iter().all(|r| r.passed);
    let doc = json!({
        "config": config,
        "suites": reports,
        "passed": all_passed,
    });
    match common.format {
        Format::Json => emit(common, render_json(&doc))?,
        Format::Csv => {
            return Err(Error::InvalidParameter(
                "check has no CSV representation; use --format json or text".into(),
            ))
        }
        Format::Text => {
            let mut s = String::new();
            s += &format!("config: {}\n", serde_json::to_string(&config).unwrap());
            for rep in &reports {
                s += &format!("suite {} (d = {}):\n", rep.suite, rep.d);
                for c in &rep.checks {
                    let dev = c
                        .deviation
                        .map(|x| format!(" deviation {x:.3e}"))
                        .unwrap_or_else(|| " exact".to_string());
                    s += &format!(
                        "  [{}] {}{}\n",
                        if c.passed { "pass" } else { "FAIL" },
                        c.name,
                        dev
                    );
                }
            }
            s += &format!("overall: {}\n", if all_passed { "pass" } else { "FAIL" });
            emit(common, s)?;
        }
    }
    if !all_passed {
        return Err(Error::InvalidParameter("one or more checks failed".into()));
    }
    Ok(())
}

fn fmt_name(f: Format) -> &'static str {
    match f {
        Format::Text => "text",
        Format::Json => "json",
        Format::Csv => "csv",
    }
}

//! `rectenna`: design and simulation front end.
//!
//! Units at the command line are GHz, mm, dBm, Ω, nH and pF; everything is
//! converted to SI before reaching the library. Data goes to stdout (or
//! `--out`), diagnostics to stderr. Exit codes: 0 success, 1 computation
//! error, 2 usage error.

mod config;

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use rectenna_core::circuit::{parse_netlist, solve_transient, InitialState};
use rectenna_core::csr::{
    csr_equivalent, csr_inverse_design_with_turns, CsrGeometry, DEFAULT_TURNS,
};
use rectenna_core::diode::DiodeModelCard;
use rectenna_core::link::{dc_from_curve, received_power, LinkBudget};
use rectenna_core::matching::{
    reflection_coefficient, synthesize_l_section, MatchError,
};
use rectenna_core::patch::{design_patch, SubstrateSpec};
use rectenna_core::rectifier::{
    auto_match, large_signal_input_impedance, power_sweep, read_sweep_csv, steady_state,
    write_sweep_csv, RectifierSpec, TopologyRegistry,
};
use rectenna_core::units::{parse_complex, parse_si};

const GHZ: f64 = 1e9;
const MM: f64 = 1e-3;
const NH: f64 = 1e-9;
const PF: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "rectenna", version, about = "Miniaturized rectenna design and simulation")]
struct Cli {
    /// More diagnostics on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Write data to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rectangular patch dimensions for a resonant frequency.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    DesignPatch(PatchArgs),
    /// Spiral resonator: geometry for a frequency, or frequency for a geometry.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    DesignCsr(CsrArgs),
    /// All L-sections matching a load to the reference impedance.
    #[command(name = "match", args_override_self = true, allow_negative_numbers = true)]
    Match(MatchArgs),
    /// Rectifier steady state at one input power.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    SimulateRectifier(SimulateArgs),
    /// Rectifier steady state over an input-power range.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Large-signal input impedance at the rectifier port.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Impedance(ImpedanceArgs),
    /// Friis received power, optionally followed through a sweep CSV.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    LinkBudget(LinkArgs),
    /// Transient simulation of a text netlist.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Transient(TransientArgs),
    /// List the registered rectifier topologies.
    Topologies,
}

#[derive(Debug, Args)]
struct PatchArgs {
    /// Resonant frequency (GHz).
    #[arg(long)]
    f0: f64,
    /// Substrate relative permittivity.
    #[arg(long, default_value_t = 4.3)]
    er: f64,
    /// Substrate thickness (mm).
    #[arg(long, default_value_t = 1.6)]
    h: f64,
    /// Substrate loss tangent.
    #[arg(long, default_value_t = 0.025)]
    tand: f64,
}

#[derive(Debug, Args)]
struct CsrArgs {
    /// Target resonant frequency (GHz); selects inverse design.
    #[arg(long, required_unless_present_all = ["length", "width"], conflicts_with_all = ["length", "width"])]
    f0: Option<f64>,
    /// Per-unit-length inductance (nH/mm).
    #[arg(long, default_value_t = 1.0)]
    lpul: f64,
    /// Width over length for inverse design.
    #[arg(long, default_value_t = 1.0)]
    aspect: f64,
    #[arg(long, default_value_t = DEFAULT_TURNS)]
    turns: u32,
    /// Spiral length (mm); with --width selects forward analysis.
    #[arg(long, requires = "width")]
    length: Option<f64>,
    /// Spiral width (mm).
    #[arg(long, requires = "length")]
    width: Option<f64>,
}

#[derive(Debug, Args)]
struct MatchArgs {
    /// Load impedance, e.g. `30-j20` (Ω).
    #[arg(long, allow_hyphen_values = true, value_parser = complex_arg)]
    z: Complex64,
    /// Reference impedance (Ω).
    #[arg(long, default_value_t = 50.0)]
    z0: f64,
    /// Frequency (GHz).
    #[arg(long, default_value_t = 1.8)]
    f: f64,
}

#[derive(Debug, Args)]
struct RectifierArgs {
    /// Rectifier back end, by registry name (see `topologies`).
    #[arg(long, default_value = "series-diode")]
    topology: String,
    /// Diode model card file (SPICE-style `KEY=value` parameters).
    #[arg(long, value_name = "PATH")]
    diode_card: Option<PathBuf>,
    /// Load resistance (Ω).
    #[arg(long, default_value_t = 10e3)]
    rl: f64,
    /// Smoothing capacitance (pF).
    #[arg(long, default_value_t = 100.0)]
    cs: f64,
    /// Source impedance (Ω).
    #[arg(long, default_value_t = 50.0)]
    rs: f64,
    /// Drive frequency (GHz).
    #[arg(long, default_value_t = 1.8)]
    f: f64,
    /// Coupling capacitance used by the shunt and doubler back ends (pF).
    #[arg(long, default_value_t = 100.0)]
    cc: f64,
    /// RF choke used by the shunt back end (nH).
    #[arg(long, default_value_t = 100.0)]
    choke: f64,
    /// Time steps per RF period.
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long, default_value_t = 2000)]
    max_cycles: usize,
    /// Input power (dBm) at which the L-section is auto-matched.
    #[arg(long)]
    match_at: Option<f64>,
    /// Simulate without a matching network.
    #[arg(long, conflicts_with = "match_at")]
    no_match: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Available input power (dBm).
    #[arg(long, default_value_t = -10.0)]
    p: f64,
    #[command(flatten)]
    rect: RectifierArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// First input power (dBm).
    #[arg(long, default_value_t = -20.0)]
    from: f64,
    /// Last input power (dBm).
    #[arg(long, default_value_t = 0.0)]
    to: f64,
    /// Power step (dB).
    #[arg(long, default_value_t = 5.0)]
    step: f64,
    #[command(flatten)]
    rect: RectifierArgs,
}

#[derive(Debug, Args)]
struct ImpedanceArgs {
    /// Available input power (dBm).
    #[arg(long, default_value_t = -10.0)]
    p: f64,
    #[command(flatten)]
    rect: RectifierArgs,
}

#[derive(Debug, Args)]
struct LinkArgs {
    /// Transmit power (dBm).
    #[arg(long)]
    pt: f64,
    /// Transmit antenna gain (dBi).
    #[arg(long, default_value_t = 0.0)]
    gt: f64,
    /// Receive antenna gain (dBi).
    #[arg(long, default_value_t = 2.5)]
    gr: f64,
    /// Distance (m).
    #[arg(long)]
    d: f64,
    /// Frequency (GHz).
    #[arg(long, default_value_t = 1.8)]
    f: f64,
    /// Sweep CSV used as the efficiency curve.
    #[arg(long, value_name = "PATH")]
    curve: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TransientArgs {
    /// Netlist file.
    #[arg(long, value_name = "PATH")]
    netlist: PathBuf,
    /// Stop time (s, SPICE suffixes allowed).
    #[arg(long, value_parser = si_arg)]
    tstop: f64,
    /// Time step (s, SPICE suffixes allowed).
    #[arg(long, value_parser = si_arg)]
    dt: f64,
}

fn complex_arg(s: &str) -> Result<Complex64, String> {
    parse_complex(s).ok_or_else(|| format!("`{s}` is not an impedance like 30-j20"))
}

fn si_arg(s: &str) -> Result<f64, String> {
    parse_si(s).ok_or_else(|| format!("`{s}` is not a number"))
}

/// Failure with its exit code.
enum Failure {
    Usage(anyhow::Error),
    Compute(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Compute(e.into())
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

type Outcome = Result<(), Failure>;

fn rectifier_spec(a: &RectifierArgs) -> Result<RectifierSpec, Failure> {
    let registry = TopologyRegistry::with_builtins();
    let topology = registry.resolve(&a.topology).map_err(|e| {
        let names: Vec<_> = registry.names().collect();
        usage(anyhow!("{e}; available: {}", names.join(", ")))
    })?;
    let diode = match &a.diode_card {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(usage)?;
            DiodeModelCard::parse(&text)
                .with_context(|| format!("in {}", path.display()))
                .map_err(usage)?
        }
        None => DiodeModelCard::default(),
    };
    let spec = RectifierSpec {
        topology,
        diode,
        matching: None,
        smoothing_capacitance: a.cs * PF,
        load_resistance: a.rl,
        source_impedance: a.rs,
        frequency: a.f * GHZ,
        coupling_capacitance: a.cc * PF,
        choke_inductance: a.choke * NH,
        steps_per_cycle: a.steps,
        max_cycles: a.max_cycles,
        ..RectifierSpec::default()
    };
    spec.validate().map_err(usage)?;
    Ok(spec)
}

/// Inserts an auto-matched L-section unless matching is off.
fn with_matching(mut spec: RectifierSpec, match_at: Option<f64>) -> Result<RectifierSpec, Failure> {
    let Some(p) = match_at else {
        return Ok(spec);
    };
    let outcome = auto_match(&spec, p, spec.frequency)?;
    match &outcome.network {
        Some(s) => log::info!(
            "matched at {p} dBm in {} iterations: {} {} {:e}, {} {:e}, |gamma| = {:.4}",
            outcome.iterations,
            s.topology,
            s.series.kind(),
            s.series.value(),
            s.shunt.kind(),
            s.shunt.value(),
            outcome.gamma
        ),
        None => log::info!("already matched at {p} dBm (|gamma| = {:.4})", outcome.gamma),
    }
    spec.matching = outcome.network;
    Ok(spec)
}

fn default_match(a: &RectifierArgs) -> Option<f64> {
    if a.no_match {
        None
    } else {
        Some(a.match_at.unwrap_or(-10.0))
    }
}

fn design_patch_cmd(a: &PatchArgs, out: &mut dyn Write) -> Outcome {
    let sub = SubstrateSpec {
        eps_r: a.er,
        tan_d: a.tand,
        h: a.h * MM,
    };
    let d = design_patch(a.f0 * GHZ, &sub).map_err(usage)?;
    writeln!(out, "f0_GHz,eps_r,h_mm,W_mm,L_mm,eps_eff,delta_L_mm")?;
    writeln!(
        out,
        "{},{},{},{:.4},{:.4},{:.6},{:.4}",
        a.f0,
        a.er,
        a.h,
        d.w / MM,
        d.l / MM,
        d.eps_eff,
        d.delta_l / MM
    )?;
    Ok(())
}

fn design_csr_cmd(a: &CsrArgs, out: &mut dyn Write) -> Outcome {
    // nH/mm is numerically µH/m
    let lpul = a.lpul * NH / MM;
    let geom = match (a.f0, a.length, a.width) {
        (Some(f0), _, _) => csr_inverse_design_with_turns(f0 * GHZ, lpul, a.aspect, a.turns),
        (None, Some(l), Some(w)) => Ok(CsrGeometry {
            turns: a.turns,
            ..CsrGeometry::new(l * MM, w * MM, lpul)
        }),
        _ => unreachable!("clap enforces one mode"),
    }
    .map_err(usage)?;
    let eq = csr_equivalent(&geom).map_err(usage)?;
    writeln!(out, "length_mm,width_mm,turns,lpul_nH_per_mm,Lo_nH,Ls_nH,C_pF,f0_GHz")?;
    writeln!(
        out,
        "{:.4},{:.4},{},{},{:.4},{:.4},{:.6},{:.6}",
        geom.length / MM,
        geom.width / MM,
        geom.turns,
        a.lpul,
        eq.outer_inductance / NH,
        eq.spiral_inductance / NH,
        eq.coupling_capacitance / PF,
        eq.resonant_frequency / GHZ
    )?;
    Ok(())
}

fn match_cmd(a: &MatchArgs, out: &mut dyn Write) -> Outcome {
    let f = a.f * GHZ;
    let header = "topology,series_kind,series_value_SI,shunt_kind,shunt_value_SI,gamma_mag";
    let sections = match synthesize_l_section(a.z, a.z0, f) {
        Ok(s) => s,
        Err(MatchError::AlreadyMatched { gamma }) => {
            log::warn!("load is already matched (|gamma| = {gamma:.3e}); no network needed");
            writeln!(out, "{header}")?;
            return Ok(());
        }
        Err(e @ MatchError::InvalidInput(_)) => return Err(usage(e)),
        Err(e) => return Err(e.into()),
    };
    writeln!(out, "{header}")?;
    for s in sections {
        let gamma = reflection_coefficient(s.abcd(f).input_impedance(a.z), a.z0)?
            .gamma
            .norm();
        writeln!(
            out,
            "{},{},{:e},{},{:e},{:.3e}",
            s.topology,
            s.series.kind(),
            s.series.value(),
            s.shunt.kind(),
            s.shunt.value(),
            gamma
        )?;
    }
    Ok(())
}

fn simulate_cmd(a: &SimulateArgs, out: &mut dyn Write) -> Outcome {
    let spec = with_matching(rectifier_spec(&a.rect)?, default_match(&a.rect))?;
    let r = steady_state(&spec, a.p)?;
    writeln!(out, "P_in_dBm,V_dc_V,efficiency,ripple_V,ReZin_ohm,ImZin_ohm,cycles")?;
    writeln!(
        out,
        "{},{},{},{},{},{},{}",
        r.input_power_dbm, r.v_dc, r.efficiency, r.ripple, r.z_in.re, r.z_in.im, r.cycles_to_converge
    )?;
    Ok(())
}

fn sweep_cmd(a: &SweepArgs, out: &mut dyn Write) -> Outcome {
    let spec = with_matching(rectifier_spec(&a.rect)?, default_match(&a.rect))?;
    let sweep = power_sweep(&spec, a.from, a.to, a.step).map_err(usage)?;
    write_sweep_csv(&mut *out, &sweep)?;
    for fail in &sweep.failures {
        writeln!(out, "# failed at {} dBm: {}", fail.p_in_dbm, fail.error)?;
    }
    if !sweep.failures.is_empty() {
        return Err(Failure::Compute(anyhow!(
            "{} of {} sweep points failed",
            sweep.failures.len(),
            sweep.failures.len() + sweep.rows.len()
        )));
    }
    Ok(())
}

fn impedance_cmd(a: &ImpedanceArgs, out: &mut dyn Write) -> Outcome {
    // the bare rectifier unless a match is asked for
    let spec = with_matching(rectifier_spec(&a.rect)?, a.rect.match_at)?;
    let z = large_signal_input_impedance(&spec, a.p, spec.frequency)?;
    let gamma = reflection_coefficient(z, spec.source_impedance)?.gamma.norm();
    writeln!(out, "P_in_dBm,f_GHz,ReZin_ohm,ImZin_ohm,gamma_mag")?;
    writeln!(out, "{},{},{},{},{}", a.p, a.rect.f, z.re, z.im, gamma)?;
    Ok(())
}

fn link_cmd(a: &LinkArgs, out: &mut dyn Write) -> Outcome {
    let link = LinkBudget {
        p_t: a.pt,
        g_t: a.gt,
        g_r: a.gr,
        d: a.d,
        f: a.f * GHZ,
    };
    let p_r = received_power(&link).map_err(usage)?;
    match &a.curve {
        None => {
            writeln!(out, "P_r_dBm,path_loss_dB")?;
            writeln!(out, "{},{}", p_r, link.path_loss_db())?;
        }
        Some(path) => {
            let file = File::open(path)
                .with_context(|| format!("opening {}", path.display()))
                .map_err(usage)?;
            let curve = read_sweep_csv(BufReader::new(file))
                .with_context(|| format!("reading {}", path.display()))
                .map_err(usage)?;
            let est = dc_from_curve(p_r, &curve)?;
            writeln!(out, "P_r_dBm,path_loss_dB,efficiency,P_dc_W,V_dc_V")?;
            writeln!(
                out,
                "{},{},{},{},{}",
                p_r,
                link.path_loss_db(),
                est.efficiency,
                est.p_dc,
                est.v_dc
            )?;
        }
    }
    Ok(())
}

fn transient_cmd(a: &TransientArgs, out: &mut dyn Write) -> Outcome {
    let text = fs::read_to_string(&a.netlist)
        .with_context(|| format!("reading {}", a.netlist.display()))
        .map_err(usage)?;
    let net = parse_netlist(&text).map_err(usage)?;
    let wave = solve_transient(&net, a.tstop, a.dt, InitialState::Zero)?;
    wave.write_csv(out)?;
    Ok(())
}

fn topologies_cmd(out: &mut dyn Write) -> Outcome {
    writeln!(out, "name,description")?;
    for t in TopologyRegistry::with_builtins().iter() {
        writeln!(out, "{},{}", t.name(), t.description().replace(',', ";"))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Outcome {
    let mut buf: Vec<u8> = Vec::new();
    let result = match &cli.command {
        Command::DesignPatch(a) => design_patch_cmd(a, &mut buf),
        Command::DesignCsr(a) => design_csr_cmd(a, &mut buf),
        Command::Match(a) => match_cmd(a, &mut buf),
        Command::SimulateRectifier(a) => simulate_cmd(a, &mut buf),
        Command::Sweep(a) => sweep_cmd(a, &mut buf),
        Command::Impedance(a) => impedance_cmd(a, &mut buf),
        Command::LinkBudget(a) => link_cmd(a, &mut buf),
        Command::Transient(a) => transient_cmd(a, &mut buf),
        Command::Topologies => topologies_cmd(&mut buf),
    };
    // partial data (a sweep with failed points) is still emitted
    emit(cli, &buf)?;
    result
}

fn emit(cli: &Cli, data: &[u8]) -> Outcome {
    if data.is_empty() {
        return Ok(());
    }
    match &cli.out {
        Some(path) => fs::write(path, data).with_context(|| format!("writing {}", path.display()))?,
        None => io::stdout().lock().write_all(data)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv = match config::expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

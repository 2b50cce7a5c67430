//! Command-line front end: subcommand dispatch, artifact emission and the
//! `--verify` checks.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::biphoton::{g2_fourier, g2_closed_form, pair_rate_quadrature, PairedModes};
use crate::config::{Format, LoadedConfig};
use crate::error::{Error, Result};
use crate::oracle::{cavity_transfer_oracle, Integrator, SeededRun};
use crate::output::{
    cavity_csv, dispersion_csv, events_csv, freespace_csv, g2_csv, histogram_csv, render_report,
    spectrum_csv, trace_csv, write_artifact,
};
use crate::pairgen::{
    accidental_density, coincidence_cdf, coincidence_delays, fit_decay_rates, generate, histogram, ks_critical_1pct, ks_distance,
};
use crate::plot::{emit_plot_grid, g2_figure, gain_overlay, render_svg, series_csv, spectrum_figure};
use crate::source::{require, Check, Model};
use crate::units::{
    m_to_nm, omega_to_wavelength, rad_s_to_ghz, rad_s_to_mhz, rad_s_to_wavenumber_cm, s_to_ns,
};

#[derive(Debug, Parser)]
#[command(name = "bwspdc", version, about = "Cavity-resonated backward-wave SPDC biphoton source simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Source configuration (TOML)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; defaults to output.directory from the config
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Run the numerical cross-checks and fail on a tolerance breach
    #[arg(long, global = true)]
    pub verify: bool,
    /// Event-stream seed (same as --override events.seed=N)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Config override, e.g. pump.power_mw=1.0 (repeatable)
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleIntegrator {
    Rk4,
    Adaptive,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Refractive and group indices over the data range
    Dispersion,
    /// Poling period and indices at the design point
    Design,
    /// Free-space gain spectra of both geometries
    Freespace,
    /// Cavity rates, cluster spacing and the single-mode test
    Cavity,
    /// Biphoton spectrum, linewidth, pair rate and brightness
    Biphoton,
    /// Glauber correlation function
    G2,
    /// Synthetic detection events and coincidence histogram
    Events,
    /// Full scalar report
    Report,
    /// Seeded cavity ODE run with a convergence trace
    #[command(hide = true)]
    Oracle {
        /// seed detuning in units of max(Gamma)
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        detuning: f64,
        #[arg(long, value_enum, default_value = "rk4")]
        integrator: OracleIntegrator,
    },
}

/// What a subcommand produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub text: String,
    pub files: Vec<PathBuf>,
    /// set when a `--verify` check failed; artifacts are still written
    pub failure: Option<Error>,
}

struct Ctx {
    loaded: LoadedConfig,
    out_dir: PathBuf,
    verify: bool,
}

impl Ctx {
    fn csv(&self) -> bool {
        self.loaded.config.output.formats.contains(&Format::Csv)
    }

    fn svg(&self) -> bool {
        self.loaded.config.output.formats.contains(&Format::Svg)
    }

    fn hash(&self) -> &str {
        &self.loaded.hash
    }
}

fn line(out: &mut String, name: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{name:<30} {value}");
}

fn checks_text(out: &mut String, checks: &[Check]) {
    for c in checks {
        let _ = writeln!(
            out,
            "verify {:<4} {} = {:.3e} (limit {:.1e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.limit
        );
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("no configuration given (use --config PATH)".into()))?;
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("events.seed={seed}"));
    }
    let loaded = LoadedConfig::load(path, &overrides)?;
    let out_dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&loaded.config.output.directory));
    let ctx = Ctx {
        loaded,
        out_dir,
        verify: cli.verify,
    };
    let mut outcome = Outcome::default();
    dispatch(&cli.command, &ctx, &mut outcome)?;
    Ok(outcome)
}

fn dispatch(cmd: &Command, ctx: &Ctx, o: &mut Outcome) -> Result<()> {
    let model = Model::new(&ctx.loaded)?;
    let mut checks = Vec::new();
    if ctx.verify {
        checks.extend(
            model
                .verify()
                .map_err(|e| Error::Verification(format!("oracle run failed: {e}")))?,
        );
    }
    match cmd {
        Command::Dispersion => dispersion(&model, ctx, o)?,
        Command::Design => design(&model, o)?,
        Command::Freespace => freespace(&model, ctx, o)?,
        Command::Cavity => cavity(&model, ctx, o)?,
        Command::Biphoton => biphoton(&model, ctx, o, &mut checks)?,
        Command::G2 => g2(&model, ctx, o, &mut checks)?,
        Command::Events => events(&model, ctx, o, &mut checks)?,
        Command::Report => {
            let report = model.report()?;
            let text = render_report(&ctx.loaded.config, ctx.hash(), &report);
            o.files.push(write_artifact(&ctx.out_dir, "report.txt", &text)?);
            o.text.push_str(&text);
        }
        Command::Oracle { detuning, integrator } => oracle(&model, ctx, o, *detuning, *integrator)?,
    }
    if ctx.verify {
        checks_text(&mut o.text, &checks);
        o.failure = require(&checks).err();
    }
    Ok(())
}

fn dispersion(model: &Model, ctx: &Ctx, o: &mut Outcome) -> Result<()> {
    let c = &model.crystal;
    let t = &mut o.text;
    for (name, w, sample) in [
        ("pump", model.omega_pump, c.pump_sample(model.omega_pump)?),
        ("signal", model.omega_signal, c.signal_sample(model.omega_signal)?),
        ("idler", model.omega_pump - model.omega_signal, c.idler_sample(model.omega_pump - model.omega_signal)?),
    ] {
        line(
            t,
            &format!("{name} ({:.2} nm)", m_to_nm(omega_to_wavelength(w))),
            format!(
                "n = {:.6}  n_g = {:.6}  dn/dw = {:.6e} s  d2n/dw2 = {:.6e} s^2",
                sample.n, sample.group_index, sample.dn_domega, sample.d2n_domega2
            ),
        );
    }
    if ctx.csv() {
        let text = dispersion_csv(ctx.hash(), &c.dispersion, 301)?;
        o.files.push(write_artifact(&ctx.out_dir, "dispersion.csv", &text)?);
    }
    Ok(())
}

fn design(model: &Model, o: &mut Outcome) -> Result<()> {
    let d = model.design()?;
    let t = &mut o.text;
    line(t, "poling_period", format!("{:.3} nm", m_to_nm(d.poling_period)));
    line(t, "qpm_order", d.qpm_order);
    line(t, "forward_poling_period", format!("{:.3} um", d.forward_poling_period * 1e6));
    line(t, "n_pump / n_signal / n_idler", format!("{:.6} / {:.6} / {:.6}", d.n_pump, d.n_signal, d.n_idler));
    line(t, "group_index_signal / idler", format!("{:.6} / {:.6}", d.group_index_signal, d.group_index_idler));
    Ok(())
}

fn freespace(model: &Model, ctx: &Ctx, o: &mut Outcome) -> Result<()> {
    let p = model.phase_match()?;
    let fs = model.freespace()?;
    let t = &mut o.text;
    let g = p.gain_linewidth_backward;
    line(
        t,
        "gain_linewidth_backward",
        format!("2pi x {:.4} GHz (2pi x {:.4} cm^-1)", rad_s_to_ghz(g), rad_s_to_wavenumber_cm(g)),
    );
    line(t, "gain_linewidth_forward", format!("2pi x {:.4} GHz", rad_s_to_ghz(p.gain_linewidth_forward)));
    line(t, "backward_forward_ratio", format!("{:.3}", p.backward_forward_ratio));
    line(t, "traveling_wave_kappa", format!("{:.6e} 1/m", fs.kappa));
    if ctx.csv() {
        o.files.push(write_artifact(&ctx.out_dir, "freespace_backward.csv", &freespace_csv(ctx.hash(), &fs, false))?);
        o.files.push(write_artifact(&ctx.out_dir, "freespace_forward.csv", &freespace_csv(ctx.hash(), &fs, true))?);
    }
    emit_figure(ctx, o, &gain_overlay(&fs, ctx.hash()), "gain_overlay")
}

fn emit_figure(ctx: &Ctx, o: &mut Outcome, fig: &crate::plot::Figure, stem: &str) -> Result<()> {
    match (ctx.csv(), ctx.svg()) {
        (true, true) => {
            let (a, b) = emit_plot_grid(fig, &ctx.out_dir, stem)?;
            o.files.push(a);
            o.files.push(b);
        }
        (true, false) => o.files.push(write_artifact(&ctx.out_dir, &format!("{stem}.csv"), &series_csv(fig))?),
        (false, true) => o.files.push(write_artifact(&ctx.out_dir, &format!("{stem}.svg"), &render_svg(fig)?)?),
        (false, false) => {}
    }
    Ok(())
}

fn cavity(model: &Model, ctx: &Ctx, o: &mut Outcome) -> Result<()> {
    let c = model.cavity()?;
    let r = &c.rates;
    let t = &mut o.text;
    line(t, "mode_pair (q, r)", format!("{}, {}", c.modes.q, c.modes.r));
    line(t, "mode_spacing (s, i)", format!("2pi x {:.4} / {:.4} GHz", rad_s_to_ghz(r.spacing_s), rad_s_to_ghz(r.spacing_i)));
    line(t, "coupling_rate (s, i)", format!("2pi x {:.4} / {:.4} MHz", rad_s_to_mhz(r.coupling_s), rad_s_to_mhz(r.coupling_i)));
    line(t, "decay_rate (s, i)", format!("2pi x {:.4} / {:.4} MHz", rad_s_to_mhz(r.decay_s), rad_s_to_mhz(r.decay_i)));
    line(t, "finesse (s, i)", format!("{:.2} / {:.2}", r.finesse_s, r.finesse_i));
    line(t, "cluster_spacing", format!("2pi x {:.4} cm^-1", rad_s_to_wavenumber_cm(c.cluster.spacing)));
    line(t, "single_mode", format!("{} (margin {:.2})", c.single_mode.single_mode, c.single_mode.margin));
    if ctx.csv() {
        o.files.push(write_artifact(&ctx.out_dir, "cavity.csv", &cavity_csv(ctx.hash(), &c))?);
    }
    Ok(())
}

fn biphoton(model: &Model, ctx: &Ctx, o: &mut Outcome, checks: &mut Vec<Check>) -> Result<()> {
    let b = model.biphoton()?;
    let t = &mut o.text;
    line(t, "kappa1", format!("{:.6e} rad/s", b.modes.kappa1.norm()));
    if b.coefficients.gain_too_large {
        line(t, "warning", "kappa1 is not small compared with the cavity decay rates");
    }
    line(t, "linewidth", format!("2pi x {:.4} MHz", rad_s_to_mhz(b.spectrum.linewidth)));
    line(t, "pair_rate", format!("{:.6e} 1/s", b.rate));
    line(t, "brightness", format!("{:.4e} 1/s/MHz ({:.4e} per mW)", b.brightness.per_mhz, b.brightness.per_mhz_per_mw));
    if ctx.verify {
        let worst = b
            .spectrum
            .omega
            .iter()
            .zip(&b.spectrum.density)
            .map(|(&w, &s)| (s / b.modes.spectral_density(w) - 1.0).abs())
            .fold(0.0, f64::max);
        checks.push(Check::new("S1 = |B1|^2/2pi vs closed form", worst, 1e-12));
        let q = pair_rate_quadrature(&b.spectrum);
        checks.push(Check::new("quadrature of S1 vs R1", (q / b.rate - 1.0).abs(), 1e-3));
        if let Some(f) = b.spectrum.scanned_fwhm {
            checks.push(Check::new("scanned FWHM vs closed-form linewidth", (f / b.spectrum.linewidth - 1.0).abs(), 5e-3));
        }
    }
    if ctx.csv() {
        o.files.push(write_artifact(&ctx.out_dir, "spectrum.csv", &spectrum_csv(ctx.hash(), &b.spectrum, b.modes.omega_q))?);
    }
    emit_figure(ctx, o, &spectrum_figure(&b.spectrum, b.modes.omega_q, ctx.hash()), "spectrum_plot")
}

fn g2(model: &Model, ctx: &Ctx, o: &mut Outcome, checks: &mut Vec<Check>) -> Result<()> {
    let b = model.biphoton()?;
    let t = &mut o.text;
    line(t, "correlation_time", format!("{:.4} ns", s_to_ns(b.g2.correlation_time)));
    line(t, "coherence_time", format!("{:.4} ns", s_to_ns(b.g2.coherence_time)));
    line(t, "g2_peak", format!("{:.6e} 1/s^2", b.g2.peak));
    line(t, "accidentals", format!("{:.6e} 1/s^2 (included: {})", b.g2.accidentals, b.g2.includes_accidentals));
    if ctx.verify {
        // the Fourier route is the lossless form
        let r = b.modes.rates;
        let lossless = crate::cavity::DecayRates::from_rates(r.decay_s, r.decay_i, r.decay_s, r.decay_i);
        let m = PairedModes { rates: lossless, ..b.modes };
        let half = 5.0 / lossless.min_decay();
        let worst = crate::numerics::linspace(-half, half, 41)
            .into_iter()
            .map(|tau| (g2_fourier(&m, tau) / g2_closed_form(&lossless, m.kappa1, tau) - 1.0).abs())
            .fold(0.0, f64::max);
        checks.push(Check::new("Fourier G2 vs closed form", worst, 1e-6));
    }
    if ctx.csv() {
        o.files.push(write_artifact(&ctx.out_dir, "g2.csv", &g2_csv(ctx.hash(), &b.g2))?);
    }
    emit_figure(ctx, o, &g2_figure(&b.g2, ctx.hash()), "g2_plot")
}

fn events(model: &Model, ctx: &Ctx, o: &mut Outcome, checks: &mut Vec<Check>) -> Result<()> {
    let b = model.biphoton()?;
    let r = b.modes.rates;
    let ev = &ctx.loaded.config.events;
    let stream = generate(b.rate, r.decay_s, r.decay_i, ev.duration_s, ev.seed)?.with_config_hash(ctx.hash());
    let window = ev.histogram_window_gamma / r.min_decay();
    let hist = histogram(&stream, window, 2.0 * window / ev.histogram_bins as f64)?;
    let t = &mut o.text;
    line(t, "pairs", stream.pairs);
    line(t, "seed", ev.seed);
    if stream.purity_warning {
        line(t, "warning", "pair rate is not small compared with the inverse coherence time");
    }
    let density = accidental_density(&stream);
    line(t, "accidental_density", format!("{:.4e} per s of delay", density));
    match fit_decay_rates(&hist, 5, density * hist.bin_width()) {
        Ok(fit) => {
            line(t, "fitted_decay (s, i)", format!("2pi x {:.4} / {:.4} MHz", rad_s_to_mhz(fit.decay_s), rad_s_to_mhz(fit.decay_i)));
            line(t, "fitted_correlation_time", format!("{:.4} ns", s_to_ns(fit.correlation_time)));
            if ctx.verify {
                checks.push(Check::new("fitted Gamma_s", (fit.decay_s / r.decay_s - 1.0).abs(), 0.05));
                checks.push(Check::new("fitted Gamma_i", (fit.decay_i / r.decay_i - 1.0).abs(), 0.05));
            }
        }
        Err(e) => line(t, "fit", format!("skipped ({e})")),
    }
    if ctx.verify {
        let mut d = coincidence_delays(&stream, window)?;
        d.sort_by(f64::total_cmp);
        let fraction = (density * 2.0 * window / d.len() as f64).min(1.0);
        let ks = ks_distance(&d, |x| coincidence_cdf(x, r.decay_s, r.decay_i, window, fraction));
        checks.push(Check::new("KS distance of delays", ks, ks_critical_1pct(d.len())));
    }
    if ctx.csv() {
        o.files.push(write_artifact(&ctx.out_dir, "events.csv", &events_csv(&stream))?);
        o.files.push(write_artifact(&ctx.out_dir, "histogram.csv", &histogram_csv(ctx.hash(), &hist))?);
    }
    Ok(())
}

fn oracle(model: &Model, ctx: &Ctx, o: &mut Outcome, detuning: f64, integrator: OracleIntegrator) -> Result<()> {
    let (modes, _) = model.paired_modes()?;
    let probe = PairedModes {
        kappa1: num_complex::Complex64::new(1e-4 * modes.rates.min_decay(), 0.0),
        ..modes
    };
    let integrator = match integrator {
        OracleIntegrator::Rk4 => Integrator::Rk4,
        OracleIntegrator::Adaptive => Integrator::Adaptive,
    };
    let delta = detuning * probe.rates.max_decay();
    let out = cavity_transfer_oracle(&probe, &SeededRun::for_modes(&probe, delta, integrator))?;
    let w = probe.omega_q + delta;
    let t = &mut o.text;
    line(t, "steps", out.steps);
    line(t, "drift", format!("{:.3e}", out.drift));
    line(t, "signal_ratio vs A1", format!("{:.3e}", (out.signal_ratio - probe.a1(w)).norm() / probe.a1(w).norm()));
    line(t, "idler_ratio vs C1", format!("{:.3e}", (out.idler_ratio - probe.c1(w)).norm() / probe.c1(w).norm()));
    o.files.push(write_artifact(&ctx.out_dir, "oracle_trace.csv", &trace_csv(ctx.hash(), &out.trace))?);
    Ok(())
}

/// Parse, run and print; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.text);
            for f in &outcome.files {
                eprintln!("wrote {}", display(f));
            }
            match outcome.failure {
                None => 0,
                Some(e) => report_error(&e),
            }
        }
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &Error) -> i32 {
    let category = e.category();
    eprintln!("error: category={} message={}", category.as_str(), e);
    category.exit_code()
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

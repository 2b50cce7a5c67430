//! CSV artifacts and the text report. Every artifact starts with a
//! `# config_hash=` line; CSV uses a header row, commas and LF endings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::biphoton::{G2Curve, Spectrum};
use crate::config::SourceConfig;
use crate::dispersion::{Axis, DispersionData};
use crate::error::{Error, Result};
use crate::numerics::linspace;
use crate::oracle::TracePoint;
use crate::pairgen::{CoincidenceHistogram, EventStream};
use crate::source::{CavityReport, FreeSpaceOutputs, FullReport};
use crate::units::{
    m_to_nm, rad_s_to_ghz, rad_s_to_mhz, rad_s_to_wavenumber_cm, s_to_ns, um_to_m, w_to_mw,
    wavelength_to_omega,
};

fn num(v: f64) -> String {
    format!("{v:.10e}")
}

/// Build CSV text: hash line, header, rows.
pub fn csv<I>(hash: &str, header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = format!("# config_hash={hash}\n{}\n", header.join(","));
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_artifact(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn dispersion_csv(hash: &str, data: &DispersionData, points: usize) -> Result<String> {
    let y = data.axis(Axis::Y)?;
    let z = data.axis(Axis::Z)?;
    let (lo_y, hi_y) = y.valid_range_um();
    let (lo_z, hi_z) = z.valid_range_um();
    // stay clear of the edges so the wavelength round trip cannot leave the range
    let (lo, hi) = (lo_y.max(lo_z) * (1.0 + 1e-9), hi_y.min(hi_z) * (1.0 - 1e-9));
    let mut rows = Vec::with_capacity(points);
    for um in linspace(lo, hi, points) {
        let w = wavelength_to_omega(um_to_m(um));
        let sy = y.dispersion_sample(w)?;
        let sz = z.dispersion_sample(w)?;
        rows.push(vec![
            format!("{:.3}", um * 1e3),
            num(w),
            num(sy.n),
            num(sy.group_index),
            num(sz.n),
            num(sz.group_index),
        ]);
    }
    Ok(csv(
        hash,
        &["wavelength_nm", "omega_rad_s", "n_y", "group_index_y", "n_z", "group_index_z"],
        rows,
    ))
}

/// One geometry of the free-space spectrum: omega, detuning, S.
pub fn freespace_csv(hash: &str, fs: &FreeSpaceOutputs, forward: bool) -> String {
    let s = if forward { &fs.forward } else { &fs.backward };
    csv(
        hash,
        &["omega_rad_s", "detuning_rad_s", "S"],
        fs.omega
            .iter()
            .zip(s)
            .map(|(&w, &v)| vec![num(w), num(w - fs.center), num(v)]),
    )
}

pub fn spectrum_csv(hash: &str, spectrum: &Spectrum, omega_q: f64) -> String {
    csv(
        hash,
        &["omega", "detuning", "S1"],
        spectrum
            .omega
            .iter()
            .zip(&spectrum.density)
            .map(|(&w, &v)| vec![num(w), num(w - omega_q), num(v)]),
    )
}

pub fn g2_csv(hash: &str, g2: &G2Curve) -> String {
    let max = g2.g2.iter().cloned().fold(0.0, f64::max);
    csv(
        hash,
        &["tau_ns", "G2", "G2_normalized"],
        g2.tau.iter().zip(&g2.g2).map(|(&t, &v)| {
            vec![
                format!("{:.6}", s_to_ns(t)),
                num(v),
                num(if max > 0.0 { v / max } else { 0.0 }),
            ]
        }),
    )
}

pub fn events_csv(stream: &EventStream) -> String {
    let mut out = format!(
        "# config_hash={}\n# seed={} duration_s={} pairs={}\ntime_s,channel\n",
        stream.config_hash, stream.seed, stream.duration, stream.pairs
    );
    for e in &stream.records {
        let _ = writeln!(out, "{:.12},{}", e.time, e.channel.label());
    }
    out
}

pub fn histogram_csv(hash: &str, hist: &CoincidenceHistogram) -> String {
    csv(
        hash,
        &["tau_s", "count"],
        hist.centers()
            .iter()
            .zip(&hist.counts)
            .map(|(&t, &c)| vec![num(t), c.to_string()]),
    )
}

pub fn cavity_csv(hash: &str, c: &CavityReport) -> String {
    let r = &c.rates;
    csv(
        hash,
        &[
            "Delta_s_rad_s",
            "Delta_i_rad_s",
            "gamma_s_rad_s",
            "gamma_i_rad_s",
            "Gamma_s_rad_s",
            "Gamma_i_rad_s",
            "finesse_s",
            "finesse_i",
            "cluster_spacing_rad_s",
            "single_mode_margin",
        ],
        [vec![
            num(r.spacing_s),
            num(r.spacing_i),
            num(r.coupling_s),
            num(r.coupling_i),
            num(r.decay_s),
            num(r.decay_i),
            num(r.finesse_s),
            num(r.finesse_i),
            num(c.cluster.spacing),
            num(c.single_mode.margin),
        ]],
    )
}

pub fn trace_csv(hash: &str, trace: &[TracePoint]) -> String {
    csv(
        hash,
        &["t_s", "signal_re", "signal_im", "idler_re", "idler_im"],
        trace.iter().map(|p| {
            vec![
                num(p.t),
                num(p.signal_out.re),
                num(p.signal_out.im),
                num(p.idler_out.re),
                num(p.idler_out.im),
            ]
        }),
    )
}

struct Table(String);

impl Table {
    fn row(&mut self, name: &str, si: f64, unit: &str, conventional: Option<(f64, &str)>) {
        let _ = write!(self.0, "{name:<34} {si:>16.6e} {unit:<10}");
        if let Some((v, u)) = conventional {
            let _ = write!(self.0, " {v:>14.6} {u}");
        }
        self.0.push('\n');
    }

    fn int(&mut self, name: &str, value: u64) {
        let _ = writeln!(self.0, "{name:<34} {value:>16}");
    }

    fn flag(&mut self, name: &str, value: bool) {
        let _ = writeln!(self.0, "{name:<34} {value:>16}");
    }

    fn section(&mut self, title: &str) {
        let _ = writeln!(self.0, "\n[{title}]");
    }
}

/// Full scalar table, prefixed by the config hash and the config echo.
pub fn render_report(config: &SourceConfig, hash: &str, r: &FullReport) -> String {
    let mut t = Table(format!("# config_hash={hash}\n{}\n", config.echo()));
    let d = &r.design;
    t.section("design");
    t.row("poling_period", d.poling_period, "m", Some((m_to_nm(d.poling_period), "nm")));
    t.int("qpm_order", d.qpm_order as u64);
    t.row("forward_poling_period", d.forward_poling_period, "m", Some((d.forward_poling_period * 1e6, "um")));
    t.row("n_pump", d.n_pump, "", None);
    t.row("n_signal", d.n_signal, "", None);
    t.row("n_idler", d.n_idler, "", None);
    t.row("group_index_signal", d.group_index_signal, "", None);
    t.row("group_index_idler", d.group_index_idler, "", None);
    t.row("delta_k_design", d.delta_k, "1/m", None);

    let p = &r.phase_match;
    t.section("phase_matching");
    let gl = p.gain_linewidth_backward;
    t.row("gain_linewidth_backward", gl, "rad/s", Some((rad_s_to_ghz(gl), "GHz x 2pi")));
    t.row("gain_linewidth_backward_cm", gl, "rad/s", Some((rad_s_to_wavenumber_cm(gl), "cm^-1 x 2pi")));
    let gx = p.gain_linewidth_backward_exact;
    t.row("gain_linewidth_backward_exact", gx, "rad/s", Some((rad_s_to_ghz(gx), "GHz x 2pi")));
    let gf = p.gain_linewidth_forward;
    t.row("gain_linewidth_forward", gf, "rad/s", Some((rad_s_to_ghz(gf), "GHz x 2pi")));
    t.row("backward_forward_ratio", p.backward_forward_ratio, "", None);

    let c = &r.cavity;
    let rt = &c.rates;
    t.section("cavity");
    t.int("mode_q", c.modes.q);
    t.int("mode_r", c.modes.r);
    t.row("omega_q", c.modes.omega_q, "rad/s", None);
    t.row("omega_r", c.modes.omega_r, "rad/s", None);
    t.row("mode_pair_mismatch", c.modes.mismatch, "rad/s", None);
    t.row("mode_spacing_signal", rt.spacing_s, "rad/s", Some((rad_s_to_ghz(rt.spacing_s), "GHz x 2pi")));
    t.row("mode_spacing_idler", rt.spacing_i, "rad/s", Some((rad_s_to_ghz(rt.spacing_i), "GHz x 2pi")));
    t.row("coupling_rate_signal", rt.coupling_s, "rad/s", Some((rad_s_to_mhz(rt.coupling_s), "MHz x 2pi")));
    t.row("coupling_rate_idler", rt.coupling_i, "rad/s", Some((rad_s_to_mhz(rt.coupling_i), "MHz x 2pi")));
    t.row("decay_rate_signal", rt.decay_s, "rad/s", Some((rad_s_to_mhz(rt.decay_s), "MHz x 2pi")));
    t.row("decay_rate_idler", rt.decay_i, "rad/s", Some((rad_s_to_mhz(rt.decay_i), "MHz x 2pi")));
    t.row("finesse_signal", rt.finesse_s, "", None);
    t.row("finesse_idler", rt.finesse_i, "", None);
    t.row("cluster_m", c.cluster.m, "s^2", None);
    t.row("cluster_n", c.cluster.n, "s", None);
    t.row(
        "cluster_spacing",
        c.cluster.spacing,
        "rad/s",
        Some((rad_s_to_wavenumber_cm(c.cluster.spacing), "cm^-1 x 2pi")),
    );
    t.flag("single_mode", c.single_mode.single_mode);
    t.row("single_mode_margin", c.single_mode.margin, "", None);

    let b = &r.biphoton;
    t.section("biphoton");
    t.row("kappa1_magnitude", r.kappa1.norm(), "rad/s", None);
    t.row("kappa1_phase", r.kappa1.arg(), "rad", None);
    t.row("mode_pair_delta_k", r.dk_prime, "1/m", None);
    t.flag("gain_too_large", r.gain_too_large);
    t.row("pump_power", r.pump_power, "W", Some((w_to_mw(r.pump_power), "mW")));
    t.row("linewidth", b.linewidth, "rad/s", Some((rad_s_to_mhz(b.linewidth), "MHz x 2pi")));
    t.row("pair_rate", b.rate, "1/s", None);
    t.row("correlation_time", b.correlation_time, "s", Some((s_to_ns(b.correlation_time), "ns")));
    t.row("coherence_time", b.coherence_time, "s", Some((s_to_ns(b.coherence_time), "ns")));
    t.row("g2_peak", b.g2_peak, "1/s^2", None);
    t.row("accidentals", b.accidentals, "1/s^2", None);
    t.row("brightness", b.rate / b.linewidth, "1/s/(rad/s)", None);
    t.row("brightness_per_mhz", b.brightness_per_mhz, "1/s/MHz", None);
    t.row("brightness_per_mhz_per_mw", b.brightness_per_mhz_per_mw, "1/s/MHz/mW", None);

    let f = &r.forward;
    t.section("forward_reference");
    t.row("kappa", f.kappa, "1/m", None);
    t.row("pair_rate", f.figure.rate, "1/s", None);
    t.row("gain_linewidth", f.figure.linewidth, "rad/s", Some((rad_s_to_ghz(f.figure.linewidth), "GHz x 2pi")));
    t.row("resonant_vs_forward_ratio", f.ratio, "", None);
    t.0
}

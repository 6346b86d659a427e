//! On-disk formats: sample, track, plan-log, metrics and speed-profile CSVs
//! and the TOML envelope file.
//!
//! CSV numbers are written with 9 significant digits in `%g` style, which is
//! locale-independent and reads back with any CSV tool. The envelope file
//! stores shortest round-trip floats, so writing and reading it is exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use vdyn_core::dynamics::Control;
use vdyn_core::planner::{Metrics, PlanLog, Track};
use vdyn_core::{AccelSample, EnvelopeModel};

use crate::error::{CliError, Result};

/// Significant digits of every number written to a CSV file.
pub const CSV_DIGITS: usize = 9;

/// Version of the envelope file layout; bumped on incompatible changes.
pub const ENVELOPE_SCHEMA_VERSION: u32 = 1;

pub const SAMPLE_COLUMNS: [&str; 9] = ["v_x0", "v_y0", "mu", "T_f", "T_r", "delta", "a_X", "a_Y", "a_psi"];

pub const PLAN_LOG_COLUMNS: [&str; 14] =
    ["t", "X", "Y", "psi", "v_x", "v_y", "v_psi", "u_x", "u_y", "u_psi", "solve_ms", "lat_err", "progress", "failed"];

pub const METRICS_COLUMNS: [&str; 7] =
    ["model", "avg_solve_ms", "rms_lat_err_m", "max_lat_err_m", "lap_time_s", "min_corner_speed_mps", "failures"];

/// `x` with [`CSV_DIGITS`] significant digits, trailing zeros removed, in
/// fixed notation for moderate exponents and scientific otherwise.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", CSV_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= CSV_DIGITS as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (CSV_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn create(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_row<I, S>(w: &mut csv::Writer<fs::File>, path: &Path, row: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(row).map_err(|e| CliError::io(path, e))
}

/// Column positions of `wanted` in a CSV header, failing on the first
/// missing column.
fn column_indices<const N: usize>(headers: &csv::StringRecord, wanted: [&str; N], path: &Path) -> Result<[usize; N]> {
    let mut out = [0; N];
    for (slot, name) in out.iter_mut().zip(wanted) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::Config(format!("{}: missing column `{name}`", path.display())))?;
    }
    Ok(out)
}

fn parse_field(record: &csv::StringRecord, i: usize, name: &str, path: &Path) -> Result<f64> {
    let line = record.position().map_or(0, |p| p.line());
    let raw = record.get(i).unwrap_or("").trim();
    raw.parse()
        .map_err(|_| CliError::Config(format!("{}:{line}: column `{name}`: `{raw}` is not a number", path.display())))
}

pub fn write_samples(path: &Path, samples: &[AccelSample]) -> Result<()> {
    let mut w = create(path)?;
    write_row(&mut w, path, SAMPLE_COLUMNS)?;
    for s in samples {
        let u = s.control;
        let row = [s.v_x0, s.v_y0, s.mu, u.t_f, u.t_r, u.delta, s.a_x, s.a_y, s.a_psi];
        write_row(&mut w, path, row.map(fmt_num))?;
    }
    finish(w, path)
}

pub fn read_samples(path: &Path) -> Result<Vec<AccelSample>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
    let headers = r.headers().map_err(|e| CliError::io(path, e))?.clone();
    let idx = column_indices(&headers, SAMPLE_COLUMNS, path)?;
    let mut out = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| CliError::io(path, e))?;
        let mut v = [0.0; 9];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = parse_field(&record, idx[k], SAMPLE_COLUMNS[k], path)?;
        }
        out.push(AccelSample {
            v_x0: v[0],
            v_y0: v[1],
            mu: v[2],
            control: Control::new(v[3], v[4], v[5]),
            a_x: v[6],
            a_y: v[7],
            a_psi: v[8],
        });
    }
    Ok(out)
}

/// Writes a centerline as `s,X,Y` rows after a `# half_width=… closed=…`
/// line.
pub fn write_track(path: &Path, track: &Track) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    writeln!(f, "# half_width={} closed={}", fmt_num(track.half_width), track.closed)
        .map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(["s", "X", "Y"]).map_err(|e| CliError::io(path, e))?;
    for (p, s) in track.points().iter().zip(track.arc_lengths()) {
        w.write_record([*s, p[0], p[1]].map(fmt_num)).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_track(path: &Path) -> Result<Track> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let bad = |what: &str| CliError::Config(format!("{}: {what}", path.display()));
    let meta = first.strip_prefix('#').ok_or_else(|| bad("first line must be `# half_width=<m> closed=<bool>`"))?;
    let (mut half_width, mut closed) = (None, None);
    for item in meta.split_whitespace() {
        match item.split_once('=') {
            Some(("half_width", v)) => half_width = v.parse::<f64>().ok(),
            Some(("closed", v)) => closed = v.parse::<bool>().ok(),
            _ => return Err(bad(&format!("unknown track attribute `{item}`"))),
        }
    }
    let half_width = half_width.ok_or_else(|| bad("missing or invalid half_width"))?;
    let closed = closed.ok_or_else(|| bad("missing or invalid closed flag"))?;
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    let headers = r.headers().map_err(|e| CliError::io(path, e))?.clone();
    let idx = column_indices(&headers, ["X", "Y"], path)?;
    let mut points = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| CliError::io(path, e))?;
        points.push([parse_field(&record, idx[0], "X", path)?, parse_field(&record, idx[1], "Y", path)?]);
    }
    Track::new(points, half_width, closed).map_err(|e| bad(&e.to_string()))
}

pub fn write_plan_log(path: &Path, log: &PlanLog) -> Result<()> {
    let mut w = create(path)?;
    write_row(&mut w, path, PLAN_LOG_COLUMNS)?;
    for t in &log.ticks {
        let s = &t.state;
        let mut row: Vec<String> = [
            t.t,
            s.x,
            s.y,
            s.psi,
            s.v_x,
            s.v_y,
            s.v_psi,
            t.control[0],
            t.control[1],
            t.control[2],
            t.solve_time * 1e3,
            t.lateral_error,
            t.progress,
        ]
        .map(fmt_num)
        .to_vec();
        row.push(u8::from(t.failed).to_string());
        write_row(&mut w, path, row)?;
    }
    finish(w, path)
}

fn opt_num(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// One metrics row per run: timing and tracking columns plus lap time and
/// minimum corner speed (empty when not reached).
pub fn write_metrics(path: &Path, rows: &[(&str, &Metrics, usize)]) -> Result<()> {
    let mut w = create(path)?;
    write_row(&mut w, path, METRICS_COLUMNS)?;
    for (name, m, failures) in rows {
        write_row(
            &mut w,
            path,
            [
                name.to_string(),
                fmt_num(m.avg_solve_time * 1e3),
                fmt_num(m.rms_lateral_error),
                fmt_num(m.max_lateral_error),
                opt_num(m.lap_time),
                opt_num(m.min_corner_speed),
                failures.to_string(),
            ],
        )?;
    }
    finish(w, path)
}

/// Speed against arc length, one column per run, on the union of their
/// grids; a run that did not reach a grid point leaves its cell empty.
pub fn write_speed_profiles(path: &Path, runs: &[(&str, &Metrics)]) -> Result<()> {
    let mut w = create(path)?;
    let mut header = vec!["s".to_owned()];
    header.extend(runs.iter().map(|(name, _)| format!("v_{name}")));
    write_row(&mut w, path, header)?;
    let mut grid: Vec<f64> = runs.iter().flat_map(|(_, m)| m.speed_profile.iter().map(|p| p[0])).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    for s in grid {
        let mut row = vec![fmt_num(s)];
        for (_, m) in runs {
            let v = m.speed_profile.iter().find(|p| p[0] == s).map(|p| p[1]);
            row.push(opt_num(v));
        }
        write_row(&mut w, path, row)?;
    }
    finish(w, path)
}

/// TOML layout of an envelope file.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvelopeFile {
    schema_version: u32,
    alpha: f64,
    beta: f64,
    #[serde(rename = "A")]
    a: [[f64; 3]; 6],
    b: [f64; 6],
    ax_min_poly: [f64; 3],
    ax_max_poly: [f64; 2],
}

pub fn envelope_to_toml(model: &EnvelopeModel) -> String {
    let file = EnvelopeFile {
        schema_version: ENVELOPE_SCHEMA_VERSION,
        alpha: model.alpha,
        beta: model.beta,
        a: model.a,
        b: model.b,
        ax_min_poly: model.ax_min_poly,
        ax_max_poly: model.ax_max_poly,
    };
    toml::to_string(&file).expect("envelope fields are plain floats")
}

pub fn envelope_from_toml(text: &str, origin: &Path) -> Result<EnvelopeModel> {
    let f: EnvelopeFile = toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", origin.display())))?;
    if f.schema_version != ENVELOPE_SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "{}: schema_version {} is not supported (expected {ENVELOPE_SCHEMA_VERSION})",
            origin.display(),
            f.schema_version
        )));
    }
    let model = EnvelopeModel {
        alpha: f.alpha,
        beta: f.beta,
        a: f.a,
        b: f.b,
        ax_min_poly: f.ax_min_poly,
        ax_max_poly: f.ax_max_poly,
    };
    model.validate().map_err(|e| CliError::Config(format!("{}: {e}", origin.display())))?;
    Ok(model)
}

pub fn write_envelope(path: &Path, model: &EnvelopeModel) -> Result<()> {
    fs::write(path, envelope_to_toml(model)).map_err(|e| CliError::io(path, e))
}

pub fn read_envelope(path: &Path) -> Result<EnvelopeModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    envelope_from_toml(&text, path)
}

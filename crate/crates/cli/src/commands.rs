use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use ebingeom_core::cone::{dist_prime, ConePoint};
use ebingeom_core::convergence::{convergence_table, AnalyticPair};
use ebingeom_core::fields::{ebin_distance, l2_geodesic, weighted_contributions};
use ebingeom_core::io::{read_field_pair, FieldFile, IsometryFile};
use ebingeom_core::{GeomError, SpdMatrix};
use serde::Serialize;

use crate::report::{csv_num, digest, header, RunReport};
use crate::suites::Suite;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Why a command stopped; each kind owns one exit code.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid input.
    Input(String),
    /// The two inputs live on different manifolds.
    Mismatch(String),
    /// A numeric argument outside its range.
    Range(String),
    /// Some invariant check failed; the report was still written.
    Checks,
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Checks => 1,
            Failure::Input(_) => 2,
            Failure::Mismatch(_) => 3,
            Failure::Range(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Mismatch(m) | Failure::Range(m) => f.write_str(m),
            Failure::Checks => f.write_str("invariant checks failed"),
        }
    }
}

impl From<GeomError> for Failure {
    fn from(e: GeomError) -> Self {
        match e {
            GeomError::ManifoldMismatch => Failure::Mismatch(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

pub type Outcome = std::result::Result<(), Failure>;

/// Run context: the echoed command line and where output goes.
pub struct Ctx<'a> {
    pub command: String,
    pub out: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn emit(&mut self, text: &str) -> Outcome {
        self.out
            .write_all(text.as_bytes())
            .and_then(|_| self.out.flush())
            .map_err(|e| Failure::Input(format!("writing output: {e}")))
    }
}

fn read_bytes(path: &Path) -> std::result::Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse_field(path: &Path, bytes: &[u8]) -> std::result::Result<FieldFile, Failure> {
    let text = std::str::from_utf8(bytes).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    FieldFile::from_json(text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn check_unit_interval(t: f64) -> Outcome {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Failure::Range(format!("t = {t} is outside [0, 1]")))
    }
}

#[derive(Serialize)]
struct DistReport<'a> {
    command: &'a str,
    inputs_digest: &'a str,
    #[serde(rename = "d_E")]
    d_e: f64,
    vertices: usize,
    mass: f64,
    contribution_sum: f64,
    contribution_min: f64,
    contribution_mean: f64,
    contribution_max: f64,
    contribution_argmax: usize,
    contributions: &'a [f64],
}

pub fn dist(ctx: &mut Ctx, a: &Path, b: &Path, format: Format) -> Outcome {
    let (bytes_a, bytes_b) = (read_bytes(a)?, read_bytes(b)?);
    let (fa, fb) = (parse_field(a, &bytes_a)?, parse_field(b, &bytes_b)?);
    let (f, g) = read_field_pair(&fa, &fb)?;
    let d_e = ebin_distance(&f, &g)?;
    let contributions = weighted_contributions(&f, &g)?;
    let sum = ebingeom_core::fields::compensated_sum(contributions.iter().copied());
    let (argmax, max) = contributions
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (v, c)| if c > best.1 { (v, c) } else { best });
    let report = DistReport {
        command: &ctx.command,
        inputs_digest: &digest([bytes_a.as_slice(), bytes_b.as_slice()]),
        d_e,
        vertices: contributions.len(),
        mass: f.manifold().total_mass(),
        contribution_sum: sum,
        contribution_min: contributions.iter().copied().fold(f64::INFINITY, f64::min),
        contribution_mean: sum / contributions.len() as f64,
        contribution_max: max,
        contribution_argmax: argmax,
        contributions: &contributions,
    };
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&report).expect("reports serialize") + "\n",
        Format::Csv => {
            let mut s = header(report.command, report.inputs_digest);
            s.push_str("quantity,value\n");
            for (k, v) in [
                ("d_E", csv_num(report.d_e)),
                ("vertices", report.vertices.to_string()),
                ("mass", csv_num(report.mass)),
                ("contribution_sum", csv_num(report.contribution_sum)),
                ("contribution_min", csv_num(report.contribution_min)),
                ("contribution_mean", csv_num(report.contribution_mean)),
                ("contribution_max", csv_num(report.contribution_max)),
                ("contribution_argmax", report.contribution_argmax.to_string()),
            ] {
                s.push_str(&format!("{k},{v}\n"));
            }
            s
        }
    };
    ctx.emit(&text)
}

pub fn geodesic(ctx: &mut Ctx, a: &Path, b: &Path, t: f64) -> Outcome {
    check_unit_interval(t)?;
    let (bytes_a, bytes_b) = (read_bytes(a)?, read_bytes(b)?);
    let (fa, fb) = (parse_field(a, &bytes_a)?, parse_field(b, &bytes_b)?);
    let (f, g) = read_field_pair(&fa, &fb)?;
    let out = FieldFile::from_field(&l2_geodesic(&f, &g, t)?)?;
    ctx.emit(&(out.to_json() + "\n"))
}

pub fn apply(ctx: &mut Ctx, field: &Path, isometry: &Path) -> Outcome {
    let bytes = read_bytes(field)?;
    let f = parse_field(field, &bytes)?.to_field()?;
    let iso_bytes = read_bytes(isometry)?;
    let iso_text =
        std::str::from_utf8(&iso_bytes).map_err(|e| Failure::Input(format!("{}: {e}", isometry.display())))?;
    let spec = IsometryFile::from_json(iso_text).map_err(|e| Failure::Input(format!("{}: {e}", isometry.display())))?;
    let iso = spec.to_isometry(Arc::clone(f.manifold()))?;
    ctx.emit(&(FieldFile::from_field(&iso.apply(&f)?)?.to_json() + "\n"))
}

pub fn invariants(ctx: &mut Ctx, suite: Suite, seed: u64, format: Format) -> Outcome {
    let key = format!("suite={};seed={seed}", suite.name());
    let report = RunReport {
        command: ctx.command.clone(),
        inputs_digest: digest([key.as_bytes()]),
        checks: suite.run(seed),
    };
    ctx.emit(&match format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    })?;
    if report.all_pass() {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

pub fn converge(ctx: &mut Ctx, pair: &str, levels: usize) -> Outcome {
    if levels < 2 {
        return Err(Failure::Range(format!("need at least 2 levels, got {levels}")));
    }
    let pair: AnalyticPair = pair.parse()?;
    let table = convergence_table(pair, levels)?;
    let key = format!("pair={};levels={levels}", pair.name());
    let mut s = header(&ctx.command, &digest([key.as_bytes()]));
    s.push_str("N,d_E,delta\n");
    for row in &table.rows {
        let delta = row.delta.map(csv_num).unwrap_or_default();
        s.push_str(&format!("{},{},{delta}\n", row.side, csv_num(row.distance)));
    }
    s.push_str(&format!(
        "# final relative delta {}; deltas settling: {}\n",
        csv_num(table.final_relative_delta()),
        if table.is_settling() { "yes" } else { "no" }
    ));
    ctx.emit(&s)
}

pub fn demo_incomplete(ctx: &mut Ctx, steps: usize, n: usize) -> Outcome {
    let tip = ConePoint::tip(n)?;
    let key = format!("steps={steps};n={n}");
    let mut s = header(&ctx.command, &digest([key.as_bytes()]));
    s.push_str("j,d_prime_to_tip,closed_form,ratio\n");
    let mut prev: Option<f64> = None;
    for j in 1..=steps {
        let x = ConePoint::from_spd(&SpdMatrix::scaled_identity(n, 1.0 / j as f64)?);
        let d = dist_prime(&x, &tip)?;
        let closed = 4.0 / (n as f64).sqrt() * (j as f64).powf(-(n as f64) / 4.0);
        let ratio = prev.map(|p| csv_num(d / p)).unwrap_or_default();
        s.push_str(&format!("{j},{},{},{ratio}\n", csv_num(d), csv_num(closed)));
        prev = Some(d);
    }
    ctx.emit(&s)
}

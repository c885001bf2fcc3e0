use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;

use nambu_linkage::decomposition::PieceSystem;
use nambu_linkage::model::{LinkageFile, PinReport};
use nambu_linkage::rng::derive_seed;
use nambu_linkage::{
    commutation_defect, detect_redundant_bars, hexagon_critical_values, integral_drift, integrate,
    numeric_critical_values, pin, piece_system, system_type, validate_decomposition,
    ConstraintSystem, Decomposition, Error, LiftedField, LinkageSpec, NambuField, Realization,
    VectorField,
};

use crate::svg;
use crate::Common;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnknownVertex(_)
            | Error::InvalidSpec(_)
            | Error::InvalidDecomposition(_)
            | Error::Disconnected
            | Error::NoBars
            | Error::OverConstrained { .. }
            | Error::DimensionMismatch { .. }
            | Error::NotNambuConfiguration { .. }
            | Error::NotRigidConfiguration { .. }
            | Error::InfeasibleHexagon { .. }
            | Error::NoPieceField { .. }
            | Error::Parse(_) => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

struct Loaded {
    spec: LinkageSpec,
    decomposition: Option<Decomposition>,
}

fn load(common: &Common) -> CliResult<Loaded> {
    let text = fs::read_to_string(&common.input)
        .map_err(|e| CliError::input(format!("{}: {e}", common.input.display())))?;
    let file = LinkageFile::parse(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", common.input.display())))?;
    let spec = file.to_spec()?;
    let violations = spec.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidSpec(violations).into());
    }
    let decomposition = file
        .decomposition
        .as_ref()
        .map(|d| Decomposition::from_file(&spec, d))
        .transpose()?;
    Ok(Loaded {
        spec,
        decomposition,
    })
}

fn emit(common: &Common, text: &str) -> CliResult {
    match &common.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display()))),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::numerical(e.to_string()))
        }
    }
}

fn start(system: &ConstraintSystem, seed: u64, index: u64) -> CliResult<Realization> {
    Ok(system.random_feasible(derive_seed(seed, index), 50)?)
}

fn valid_decomposition(loaded: &Loaded, seed: u64) -> CliResult<&Decomposition> {
    let dec = loaded
        .decomposition
        .as_ref()
        .ok_or_else(|| CliError::input("the linkage file has no decomposition block"))?;
    let report = validate_decomposition(&loaded.spec, dec, seed);
    if !report.is_valid() {
        return Err(Error::InvalidDecomposition(report.violations).into());
    }
    Ok(dec)
}

/// Lifted fields of every piece that carries exactly one.
fn lifted_fields(loaded: &Loaded, system: &ConstraintSystem, seed: u64) -> CliResult<Vec<LiftedField>> {
    let dec = valid_decomposition(loaded, seed)?;
    let mut fields = Vec::new();
    for i in 0..dec.pieces().len() {
        let local: PieceSystem = piece_system(&loaded.spec, dec, i)?;
        if local.field_count() == 1 {
            fields.push(LiftedField::nambu(system, dec, i)?);
        }
    }
    Ok(fields)
}

fn chosen_field(
    loaded: &Loaded,
    system: &ConstraintSystem,
    piece: Option<usize>,
    seed: u64,
) -> CliResult<Box<dyn VectorField>> {
    if let Some(k) = piece {
        let dec = valid_decomposition(loaded, seed)?;
        if k >= dec.pieces().len() {
            return Err(CliError::input(format!(
                "piece {k} out of range ({} pieces)",
                dec.pieces().len()
            )));
        }
        return Ok(Box::new(LiftedField::nambu(system, dec, k)?));
    }
    let rows = system.bar_count() + system.diagonal_count();
    if rows + 1 == system.dim() {
        Ok(Box::new(NambuField::with_all_diagonals(system.clone())))
    } else if system.bar_count() + 1 == system.dim() {
        Ok(Box::new(NambuField::canonical(system.clone())))
    } else {
        Err(Error::NotNambuConfiguration {
            rows: system.bar_count(),
            columns: system.dim(),
        }
        .into())
    }
}

fn pinning_line(spec: &LinkageSpec, report: &PinReport) -> String {
    if report.is_identity() {
        return "pinning: none (at least two base vertices)".into();
    }
    let fixed: Vec<String> = report
        .fixed
        .iter()
        .map(|(v, p)| format!("{}=({}, {})", spec.name(*v), p.x, p.y))
        .collect();
    match report.removed_edge {
        Some(e) => {
            let edge = &spec.edges()[e];
            format!(
                "pinning: bar {} fixed with {}",
                spec.edge_label(edge.a, edge.b),
                fixed.join(", ")
            )
        }
        None => format!("pinning: fixed {}", fixed.join(", ")),
    }
}

pub fn describe(common: &Common) -> CliResult {
    let loaded = load(common)?;
    let spec = &loaded.spec;
    let pinned = pin(spec, None)?;
    let mut out = String::new();
    writeln!(
        out,
        "vertices: {}, bars: {}, marked diagonals: {}, base vertices: {}",
        spec.vertex_count(),
        spec.edges().len(),
        spec.diagonals().len(),
        spec.base().len()
    )
    .unwrap();
    writeln!(out, "{}", pinning_line(spec, pinned.report())).unwrap();

    let redundant = match detect_redundant_bars(&pinned, 16, common.seed) {
        Ok(found) => {
            match found.len() {
                0 => writeln!(out, "redundant bars: none").unwrap(),
                1 => writeln!(out, "1 redundant bar").unwrap(),
                n => writeln!(out, "{n} redundant bars").unwrap(),
            }
            for r in &found {
                let label = |e: usize| {
                    let edge = &spec.edges()[e];
                    spec.edge_label(edge.a, edge.b)
                };
                let support: Vec<String> = r.depends_on.iter().map(|&e| label(e)).collect();
                writeln!(out, "  {} depends on {}", label(r.edge), support.join(", ")).unwrap();
            }
            Some(found.len())
        }
        Err(Error::InfeasibleLengths) => {
            writeln!(out, "redundant bars: unknown (no realization found)").unwrap();
            None
        }
        Err(e) => return Err(e.into()),
    };
    let dim = (pinned.coordinate_count() + redundant.unwrap_or(0)) as i64 - pinned.bar_count() as i64;
    if dim < 0 {
        writeln!(out, "dim M: over-constrained (2n - q = {dim})").unwrap();
    } else {
        writeln!(out, "dim M = {dim}").unwrap();
    }

    if let Some(dec) = &loaded.decomposition {
        let report = validate_decomposition(spec, dec, common.seed);
        if !report.is_valid() {
            writeln!(out, "decomposition: invalid").unwrap();
            emit(common, &out)?;
            return Err(Error::InvalidDecomposition(report.violations).into());
        }
        let (p, q) = system_type(spec, dec)?;
        writeln!(out, "decomposition: valid, {} pieces", dec.pieces().len()).unwrap();
        for (i, piece) in dec.pieces().iter().enumerate() {
            let names: Vec<&str> = piece.iter().map(|&v| spec.name(v)).collect();
            writeln!(
                out,
                "  piece {i} {{{}}}: dim {}, marked diagonals {}",
                names.join(", "),
                report.piece_dimensions[i].unwrap_or(0),
                report.piece_diagonals[i]
            )
            .unwrap();
        }
        writeln!(out, "dim M = {dim}, type ({p},{q})").unwrap();
    }
    emit(common, &out)
}

fn positions_table(spec: &LinkageSpec, r: &Realization) -> String {
    let mut out = String::new();
    for (v, p) in r.positions.iter().enumerate() {
        writeln!(out, "{} {:.12} {:.12}", spec.name(v), p.x, p.y).unwrap();
    }
    out
}

pub fn solve(common: &Common) -> CliResult {
    let loaded = load(common)?;
    let system = ConstraintSystem::for_spec(&loaded.spec)?;
    let r = start(&system, common.seed, 0)?;
    let mut out = positions_table(&loaded.spec, &r);
    writeln!(out, "residual {:.3e}", r.residual).unwrap();
    emit(common, &out)
}

pub fn field(common: &Common, piece: Option<usize>) -> CliResult {
    let loaded = load(common)?;
    let system = ConstraintSystem::for_spec(&loaded.spec)?;
    let field = chosen_field(&loaded, &system, piece, common.seed)?;
    let r = start(&system, common.seed, 0)?;
    let v = field.evaluate(&r.coordinates)?;
    let velocities = system.positions(&v);
    let mut out = String::from("vertex x y vx vy\n");
    for (i, p) in r.positions.iter().enumerate() {
        let w = if system.slot_of(i).is_some() {
            velocities[i]
        } else {
            nambu_linkage::Point::zeros()
        };
        writeln!(
            out,
            "{} {:.12} {:.12} {:.12e} {:.12e}",
            loaded.spec.name(i),
            p.x,
            p.y,
            w.x,
            w.y
        )
        .unwrap();
    }
    writeln!(out, "norm {:.12e}", v.norm()).unwrap();
    emit(common, &out)
}

pub fn flow(common: &Common, piece: Option<usize>, t: f64, dt: f64) -> CliResult {
    let loaded = load(common)?;
    let system = ConstraintSystem::for_spec(&loaded.spec)?;
    let field = chosen_field(&loaded, &system, piece, common.seed)?;
    let r = start(&system, common.seed, 0)?;
    let trajectory = integrate(field.as_ref(), &system, &r.coordinates, t, dt)?;
    let mut csv = Vec::new();
    trajectory
        .write_csv(&mut csv)
        .map_err(|e| CliError::numerical(e.to_string()))?;
    emit(common, &String::from_utf8(csv).expect("CSV is ASCII"))?;
    if trajectory.halted {
        eprintln!(
            "halted at an equilibrium at t = {}",
            trajectory.last().time
        );
    }
    Ok(())
}

pub fn commute(common: &Common, s: f64, t: f64, dt: f64, starts: usize, tol: f64) -> CliResult {
    let loaded = load(common)?;
    let system = ConstraintSystem::for_spec(&loaded.spec)?;
    let fields = lifted_fields(&loaded, &system, common.seed)?;
    let mut out = String::new();
    let pieces: Vec<String> = fields.iter().map(|f| f.piece_index().to_string()).collect();
    writeln!(out, "fields from pieces: {}", pieces.join(", ")).unwrap();
    if fields.len() < 2 {
        writeln!(out, "fewer than two fields; nothing to commute").unwrap();
        return emit(common, &out);
    }
    let mut worst = 0.0_f64;
    writeln!(out, "start pair defect").unwrap();
    for k in 0..starts {
        let x = start(&system, common.seed, k as u64)?.coordinates;
        for (i, a) in fields.iter().enumerate() {
            for b in &fields[i + 1..] {
                let d = commutation_defect(a, b, &system, &x, s, t, dt)?;
                worst = worst.max(d);
                writeln!(
                    out,
                    "{k} {}-{} {d:.3e}",
                    a.piece_index(),
                    b.piece_index()
                )
                .unwrap();
            }
        }
    }
    writeln!(out, "max defect {worst:.3e} (tol {tol:e})").unwrap();
    emit(common, &out)?;
    if worst > tol {
        return Err(CliError::numerical(format!(
            "commutation defect {worst:.3e} exceeds {tol:e}"
        )));
    }
    Ok(())
}

pub fn integrals(common: &Common, t: f64, dt: f64, tol: f64) -> CliResult {
    let loaded = load(common)?;
    let system = ConstraintSystem::for_spec(&loaded.spec)?;
    if system.diagonal_count() == 0 {
        return Err(CliError::input("the linkage has no marked diagonals"));
    }
    let fields: Vec<(String, Box<dyn VectorField>)> = if loaded.decomposition.is_some() {
        lifted_fields(&loaded, &system, common.seed)?
            .into_iter()
            .map(|f| (format!("piece {}", f.piece_index()), Box::new(f) as Box<dyn VectorField>))
            .collect()
    } else if system.bar_count() + system.diagonal_count() + 1 == system.dim() {
        let field = NambuField::with_all_diagonals(system.clone());
        vec![("field".into(), Box::new(field) as Box<dyn VectorField>)]
    } else {
        return Err(CliError::input(
            "without a decomposition the marked diagonals must complete the bars to a Nambu field",
        ));
    };
    let x = start(&system, common.seed, 0)?.coordinates;
    let mut out = String::new();
    let mut worst = 0.0_f64;
    for (name, f) in &fields {
        let drift = integral_drift(f.as_ref(), &system, &x, t, dt)?;
        worst = worst.max(drift);
        writeln!(out, "{name}: drift {drift:.3e}").unwrap();
    }
    writeln!(out, "max drift {worst:.3e} (tol {tol:e})").unwrap();
    emit(common, &out)?;
    if worst > tol {
        return Err(CliError::numerical(format!(
            "first-integral drift {worst:.3e} exceeds {tol:e}"
        )));
    }
    Ok(())
}

/// Side lengths in cycle order starting at the diagonal's first end, when
/// the linkage is a hexagon whose diagonal joins opposite vertices.
fn hexagon_sides(spec: &LinkageSpec, diagonal: usize) -> Option<[f64; 6]> {
    if spec.vertex_count() != 6 || spec.edges().len() != 6 || !spec.base().is_empty() {
        return None;
    }
    let d = spec.diagonals()[diagonal];
    let mut sides = [0.0; 6];
    let (mut prev, mut at) = (usize::MAX, d.a);
    for (k, side) in sides.iter_mut().enumerate() {
        if k == 3 && at != d.b {
            return None;
        }
        let incident: Vec<&nambu_linkage::model::Edge> =
            spec.edges().iter().filter(|e| e.a == at || e.b == at).collect();
        if incident.len() != 2 {
            return None;
        }
        let e = incident
            .iter()
            .find(|e| (if e.a == at { e.b } else { e.a }) != prev)?;
        *side = e.length;
        prev = at;
        at = if e.a == at { e.b } else { e.a };
    }
    (at == d.a).then_some(sides)
}

pub fn critical(common: &Common, diagonal: usize, starts: usize, tol: f64) -> CliResult {
    let loaded = load(common)?;
    let spec = &loaded.spec;
    if diagonal >= spec.diagonals().len() {
        return Err(CliError::input(format!(
            "diagonal {diagonal} out of range ({} marked diagonals)",
            spec.diagonals().len()
        )));
    }
    let system = ConstraintSystem::for_spec(spec)?;
    let d = spec.diagonals()[diagonal];
    let label = spec.edge_label(d.a, d.b);
    let mut out = String::new();

    let listed = match hexagon_sides(spec, diagonal) {
        Some(sides) => {
            let report = hexagon_critical_values(&sides)?;
            writeln!(out, "listed critical values of |{label}|").unwrap();
            writeln!(out, "kind value").unwrap();
            writeln!(out, "max {:.6}", report.max_value).unwrap();
            for s in &report.saddle_values {
                writeln!(out, "saddle {s:.6}").unwrap();
            }
            writeln!(out, "min {:.6}", report.min_value).unwrap();
            for w in &report.warnings {
                writeln!(out, "warning: {w}").unwrap();
            }
            Some(report)
        }
        None => None,
    };

    let found = numeric_critical_values(&system, diagonal, common.seed, starts)?;
    writeln!(out, "numeric critical values of |{label}| ({starts} starts)").unwrap();
    writeln!(out, "value index nullity hits").unwrap();
    for c in &found {
        writeln!(out, "{:.6} {} {} {}", c.value, c.index, c.nullity, c.hits).unwrap();
    }

    let mut failure = None;
    if let Some(report) = &listed {
        let extra: Vec<String> = found
            .iter()
            .filter(|c| !report.values().iter().any(|l| (l - c.value).abs() <= tol))
            .map(|c| format!("{:.6}", c.value))
            .collect();
        let missing: Vec<String> = report
            .feasible_values()
            .into_iter()
            .filter(|l| !found.iter().any(|c| (l - c.value).abs() <= tol))
            .map(|l| format!("{l:.6}"))
            .collect();
        if extra.is_empty() && missing.is_empty() {
            writeln!(out, "numeric values match the listed values within {tol:e}").unwrap();
        } else {
            writeln!(out, "extra: [{}], missing: [{}]", extra.join(", "), missing.join(", ")).unwrap();
            failure = Some("numeric critical values disagree with the listed values");
        }
    }
    emit(common, &out)?;
    match failure {
        Some(m) => Err(CliError::numerical(m)),
        None => Ok(()),
    }
}

pub fn svg(common: &Common) -> CliResult {
    let loaded = load(common)?;
    let system = ConstraintSystem::for_spec(&loaded.spec)?;
    let r = start(&system, common.seed, 0)?;
    emit(common, &svg::render(&loaded.spec, &r.positions))
}

//! Acceptance criteria, one PASS/FAIL line each.

use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::Rng;

use nambu_linkage::model::LinkageFile;
use nambu_linkage::rng::{derive_seed, rng};
use nambu_linkage::{
    commutation_defect, degrees_of_freedom, detect_redundant_bars, find_return,
    hexagon_critical_values, homothety_law, integral_drift, lie_bracket_fd,
    numeric_critical_values, pin, snake_volume_check, system_type, ConstraintSystem,
    Decomposition, LiftedField, LinkageSpec, NambuField, Point,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../linkages")
        .join(name)
}

fn load(name: &str) -> (LinkageFile, LinkageSpec, Option<Decomposition>) {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    let file = LinkageFile::parse(&text).unwrap();
    let spec = file.to_spec().unwrap();
    let dec = file
        .decomposition
        .as_ref()
        .map(|d| Decomposition::from_file(&spec, d).unwrap());
    (file, spec, dec)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pendant(c: Point, d_len: f64) -> (ConstraintSystem, DVector<f64>) {
    let mut s = LinkageSpec::new(["A", "B", "C", "D"]);
    s.add_base("A", 0.0, 0.0).unwrap();
    s.add_base("B", 3.0, 0.0).unwrap();
    s.add_edge("C", "A", c.norm()).unwrap();
    s.add_edge("C", "B", (c - Point::new(3.0, 0.0)).norm()).unwrap();
    s.add_edge("C", "D", d_len).unwrap();
    let sys = ConstraintSystem::for_spec(&s).unwrap();
    let x = DVector::from_vec(vec![c.x, c.y, c.x + d_len, c.y]);
    (sys, x)
}

fn pendant_rotation() -> Outcome {
    let mut worst = 0.0_f64;
    for d in [1.0, 0.5, 2.0] {
        let (sys, x) = pendant(Point::new(0.0, 4.0), d);
        let v = NambuField::canonical(sys).evaluate_field(&x).map_err(|e| e.to_string())?;
        let u = Point::new(x[2] - x[0], x[3] - x[1]);
        let w = Point::new(v[2] - v[0], v[3] - v[1]);
        let omega = (u.x * w.y - u.y * w.x) / u.norm_squared();
        worst = worst.max((omega.abs() - 12.0).abs());
        worst = worst.max(v[0].abs()).max(v[1].abs());
    }
    let (sys, x) = pendant(Point::new(1.0, 0.0), 1.0);
    let flat = NambuField::canonical(sys).evaluate_field(&x).map_err(|e| e.to_string())?;
    let zero = flat.iter().all(|c| *c == 0.0);
    check(
        worst < 1e-9 && zero,
        format!("angular speed error {worst:.1e}, collinear field exactly zero: {zero}"),
    )
}

fn snake_volumes() -> Outcome {
    let mut r = rng(11);
    let mut worst = 0.0_f64;
    for k in [1, 2, 3, 5] {
        for _ in 0..3 {
            let lengths: Vec<f64> = (0..k).map(|_| r.random_range(0.3..3.0)).collect();
            let angles: Vec<f64> = (0..k)
                .map(|_| r.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect();
            let v = snake_volume_check(&lengths, &angles).map_err(|e| e.to_string())?;
            worst = worst.max((v.abs() - 1.0).abs());
        }
    }
    check(worst < 1e-9, format!("max | |pairing| - 1 | = {worst:.1e}"))
}

fn homothety() -> Outcome {
    let mut worst = 0.0_f64;
    let mut triangle = LinkageSpec::new(["A", "B", "C"]);
    triangle.add_edge("A", "B", 3.0).unwrap();
    triangle.add_edge("B", "C", 5.0).unwrap();
    triangle.add_edge("C", "A", 4.0).unwrap();
    let quad = LinkageSpec::polygon(&["A", "B", "C", "D"], &[1.5, 2.0, 1.8, 2.2]).unwrap();
    for c in [0.5, 2.0, 3.0] {
        let law = homothety_law(&triangle).exponent;
        let base = ConstraintSystem::for_spec(&triangle).unwrap();
        let x = base.random_feasible(3, 50).map_err(|e| e.to_string())?.coordinates;
        let s0 = NambuField::canonical(base).evaluate_scalar(&x).map_err(|e| e.to_string())?;
        let scaled = NambuField::canonical(ConstraintSystem::for_spec(&triangle.scale(c)).unwrap());
        let s1 = scaled.evaluate_scalar(&(&x * c)).map_err(|e| e.to_string())?;
        worst = worst.max((s1 - c.powi(law as i32) * s0).abs() / s1.abs());

        // The field is a vector: pushing it forward by x -> cx adds one power.
        let law = homothety_law(&quad).exponent;
        let base = ConstraintSystem::for_spec(&quad).unwrap();
        let x = base.random_feasible(5, 50).map_err(|e| e.to_string())?.coordinates;
        let v0 = NambuField::canonical(base).evaluate_field(&x).map_err(|e| e.to_string())?;
        let scaled = NambuField::canonical(ConstraintSystem::for_spec(&quad.scale(c)).unwrap());
        let v1 = scaled.evaluate_field(&(&x * c)).map_err(|e| e.to_string())?;
        worst = worst.max((&v1 - &v0 * c.powi(law as i32 + 1)).norm() / v1.norm());
    }
    check(
        worst < 1e-8,
        format!(
            "exponents {} (triangle), {} (quadrangle); max relative error {worst:.1e}",
            homothety_law(&triangle).exponent,
            homothety_law(&quad).exponent
        ),
    )
}

fn dimensions() -> Outcome {
    let dof = |spec: &LinkageSpec| degrees_of_freedom(&pin(spec, None).unwrap()).unwrap();
    let mut failures = Vec::new();
    let (_, fourbar, _) = load("fourbar.json");
    if dof(&fourbar) != 1 {
        failures.push("4-bar".to_string());
    }
    for n in 4..=8 {
        let names: Vec<String> = (1..=n).map(|i| format!("A{i}")).collect();
        let lengths: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        if dof(&LinkageSpec::polygon(&names, &lengths).unwrap()) != n - 3 {
            failures.push(format!("{n}-gon"));
        }
    }
    for (name, dim, ty) in [
        ("hexagon.json", 3, (2, 1)),
        ("heptagon.json", 4, (2, 2)),
        ("three_piece.json", 4, (3, 1)),
    ] {
        let (_, spec, dec) = load(name);
        if dof(&spec) != dim || system_type(&spec, &dec.unwrap()).ok() != Some(ty) {
            failures.push(name.to_string());
        }
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            "4-bar 1, n-gons n-3, types (2,1) (2,2) (3,1)".into()
        } else {
            format!("mismatch: {}", failures.join(", "))
        },
    )
}

fn lifted(name: &str) -> (ConstraintSystem, Vec<Arc<LiftedField>>) {
    let (_, spec, dec) = load(name);
    let dec = dec.unwrap();
    let whole = ConstraintSystem::for_spec(&spec).unwrap();
    let fields = (0..dec.pieces().len())
        .filter_map(|i| LiftedField::nambu(&whole, &dec, i).ok())
        .map(Arc::new)
        .collect();
    (whole, fields)
}

fn commutation() -> Outcome {
    let (mut defect, mut bracket) = (0.0_f64, 0.0_f64);
    for name in ["hexagon.json", "heptagon.json"] {
        let (whole, fields) = lifted(name);
        if fields.len() < 2 {
            return Err(format!("{name}: fewer than two fields"));
        }
        let (a, b) = (fields[0].as_ref(), fields[1].as_ref());
        for i in 0..20 {
            let x = whole
                .random_feasible(derive_seed(5, i), 50)
                .map_err(|e| e.to_string())?
                .coordinates;
            if i < 10 {
                let d = commutation_defect(a, b, &whole, &x, 0.1, 0.1, 1e-3)
                    .map_err(|e| e.to_string())?;
                defect = defect.max(d);
            }
            let br = lie_bracket_fd(a, b, &whole, &x, 1e-4).map_err(|e| e.to_string())?;
            bracket = bracket.max(br.norm());
        }
    }
    check(
        defect <= 1e-6 && bracket <= 1e-5,
        format!("max defect {defect:.1e}, max bracket {bracket:.1e}"),
    )
}

fn conservation() -> Outcome {
    let mut worst = 0.0_f64;
    for name in ["hexagon.json", "heptagon.json"] {
        let (whole, fields) = lifted(name);
        for i in 0..3 {
            let x = whole
                .random_feasible(derive_seed(9, i), 50)
                .map_err(|e| e.to_string())?
                .coordinates;
            for f in &fields {
                let d = integral_drift(f.as_ref(), &whole, &x, 1.0, 1e-3)
                    .map_err(|e| e.to_string())?;
                worst = worst.max(d);
            }
        }
    }
    check(worst <= 1e-8, format!("max diagonal drift {worst:.1e} over t = 1"))
}

fn hexagon_critical() -> Outcome {
    let report = hexagon_critical_values(&[1.0, 1.1, 1.3, 1.7, 1.9, 2.3]).map_err(|e| e.to_string())?;
    let expected = [0.8, 1.2, 1.3, 1.4, 2.1, 2.5];
    let mut saddles = report.saddle_values.clone();
    saddles.sort_by(f64::total_cmp);
    let exact = (report.max_value - 3.4).abs() < 1e-12
        && report.min_value == 0.0
        && saddles.len() == expected.len()
        && saddles.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12);

    let (_, spec, _) = load("hexagon.json");
    let whole = ConstraintSystem::for_spec(&spec).unwrap();
    let found = numeric_critical_values(&whole, 0, 42, 200).map_err(|e| e.to_string())?;
    let listed = report.feasible_values();
    let extra: Vec<f64> = found
        .iter()
        .map(|c| c.value)
        .filter(|v| !listed.iter().any(|l| (l - v).abs() < 1e-5))
        .collect();
    let missing: Vec<f64> = listed
        .iter()
        .copied()
        .filter(|l| !found.iter().any(|c| (c.value - l).abs() < 1e-5))
        .collect();
    check(
        exact && extra.is_empty() && missing.is_empty(),
        format!(
            "list exact: {exact}; {} numeric values, missing {missing:?}, extra {extra:?}",
            found.len()
        ),
    )
}

fn redundancy() -> Outcome {
    let (file, spec, _) = load("k4.json");
    let found = detect_redundant_bars(&pin(&spec, None).unwrap(), 16, 42).map_err(|e| e.to_string())?;
    let mut leftovers = Vec::new();
    for i in 0..file.edges.len() {
        let mut reduced = file.clone();
        reduced.edges.remove(i);
        let spec = reduced.to_spec().unwrap();
        let r = detect_redundant_bars(&pin(&spec, None).unwrap(), 16, 42).map_err(|e| e.to_string())?;
        leftovers.push(r.len());
    }
    check(
        found.len() == 1 && leftovers.iter().all(|&n| n == 0),
        format!("K4: {} certificate(s); after removing each bar: {leftovers:?}", found.len()),
    )
}

fn closed_orbit() -> Outcome {
    let (_, spec, _) = load("fourbar.json");
    let whole = ConstraintSystem::for_spec(&spec).unwrap();
    let field = NambuField::canonical(whole.clone());
    let x = whole.random_feasible(42, 50).map_err(|e| e.to_string())?.coordinates;
    let orbit = find_return(&field, &whole, &x, 1e-3, 100.0).map_err(|e| e.to_string())?;
    check(
        orbit.gap <= 1e-6,
        format!("period {:.6}, return gap {:.1e}", orbit.period, orbit.gap),
    )
}

fn cli_determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("linkage-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let runs: [(&str, &[&str]); 2] = [
        ("flow", &["--piece", "0", "--t", "0.5"]),
        ("svg", &[]),
    ];
    let mut identical = true;
    for (command, extra) in runs {
        let mut outputs = Vec::new();
        for k in 0..2 {
            let out = dir.join(format!("{command}-{k}"));
            let status = Command::new(env!("CARGO_BIN_EXE_linkage"))
                .arg(command)
                .arg(fixture("hexagon.json"))
                .args(extra)
                .args(["--seed", "3", "--out"])
                .arg(&out)
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return Err(format!("{command} exited with {status}"));
            }
            outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        identical &= outputs[0] == outputs[1] && !outputs[0].is_empty();
    }
    let _ = std::fs::remove_dir_all(&dir);
    check(identical, format!("CSV and SVG byte-identical across runs: {identical}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("pendant angular speed", pendant_rotation, Some(Duration::from_secs(1))),
        ("snake volume", snake_volumes, None),
        ("homothety", homothety, None),
        ("dimension and type", dimensions, None),
        ("commutation", commutation, Some(Duration::from_secs(30))),
        ("conservation", conservation, None),
        ("hexagon critical values", hexagon_critical, Some(Duration::from_secs(120))),
        ("redundant bars", redundancy, None),
        ("closed orbits", closed_orbit, None),
        ("cli determinism", cli_determinism, None),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let outcome = run();
        let elapsed = started.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let (verdict, detail) = match &outcome {
            Ok(d) if in_time => ("PASS", d.clone()),
            Ok(d) => ("FAIL", format!("{d}; over time limit {:?}", limit.unwrap())),
            Err(d) => ("FAIL", d.clone()),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {:2} {verdict} {name}: {detail} [{:.2}s]",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

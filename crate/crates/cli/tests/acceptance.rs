//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line
//! to stderr (uncaptured) and the test fails if any criterion fails.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

use sdistance_core::bounds::{ratio_bound_u, Setting};
use sdistance_core::certificate::{
    certify, eigen_multiplicities, verify_sign_matrix_bound, CertificateOptions,
};
use sdistance_core::embed::{
    congruent, euclidean_embeddable, Congruence, SquaredDistanceMatrix, DEFAULT_CONGRUENCE_TOL,
    DEFAULT_TOL_PSD,
};
use sdistance_core::inverse::{
    forward_all, forward_k, invert_k, invert_s3_closed, jacobian, jacobian_det_closed,
    jacobian_det_exact, Branch,
    InvertOptions, SquaredDistanceTuple,
};
use sdistance_core::pointset::{construct_johnson, construct_named, load_points, NamedConfig, PointSet};
use sdistance_core::ratios::{analyze, rational_inner_products, AnalyzeOptions, Parity, SettingChoice};
use sdistance_core::search::{enumerate_tuples, realize_catalog, Realization, DEFAULT_TUPLE_CAP};
use sdistance_core::Error;

const SEED: u64 = 0;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(took)
}

fn sdistance(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sdistance"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn cli_json(args: &[&str], expected_code: i32) -> Result<Value, String> {
    let out = sdistance(args);
    ensure(
        out.status.code() == Some(expected_code),
        format!(
            "`sdistance {}` exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ),
    )?;
    serde_json::from_slice(&out.stdout).map_err(|e| format!("stdout is not JSON: {e}"))
}

fn bundled() -> Vec<(&'static str, PointSet)> {
    vec![
        ("johnson(10,3)", construct_johnson(10, 3).unwrap()),
        ("e8", construct_named(NamedConfig::E8Roots).unwrap()),
        ("pentagon", construct_named(NamedConfig::Pentagon).unwrap()),
        ("icosahedron", construct_named(NamedConfig::Icosahedron).unwrap()),
        ("cross_polytope(4)", construct_named(NamedConfig::CrossPolytope(4)).unwrap()),
        ("simplex(5)", construct_named(NamedConfig::Simplex(5)).unwrap()),
        ("hypercube(4)", construct_named(NamedConfig::Hypercube(4)).unwrap()),
    ]
}

fn random_t(s: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let mut t: Vec<f64> = (1..s).map(|_| rng.gen_range(0.0..1.0)).collect();
        t.sort_by(f64::total_cmp);
        let mut edges = vec![0.0];
        edges.extend(&t);
        edges.push(1.0);
        if edges.windows(2).all(|w| w[1] - w[0] >= 1e-3) {
            return t;
        }
    }
}

fn johnson_reproduction() -> Outcome {
    let start = Instant::now();
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let file = dir.path().join("x.json");
    let path = file.to_str().unwrap();
    let out = sdistance(&["construct", "johnson", "-d", "10", "-s", "3", "-o", path]);
    ensure(out.status.success(), "construct failed")?;
    let x = load_points(&file).map_err(|e| e.to_string())?;
    ensure(x.len() == 165, format!("{} points", x.len()))?;
    ensure(x.len() >= 2 * 77, "fewer than 2N points")?;

    let v = cli_json(&["ratios", path], 0)?;
    let r = &v["reports"][0];
    ensure(r["setting"] == "euclidean", "not a euclidean report")?;
    ensure(r["rounded_k"] == serde_json::json!([3, -3, 1]), format!("k = {}", r["k_values"]))?;
    let sum: f64 = r["k_values"].as_array().unwrap().iter().map(|k| k.as_f64().unwrap()).sum();
    ensure((sum - 1.0).abs() < 1e-9, format!("sum k = {sum}"))?;
    ensure(r["context"]["ratio_bound"] == 6, "U(77) != 6")?;
    ensure(r["within_bound"] == serde_json::json!([true, true, true]), "bound violated")?;

    let c = cli_json(&["certify", path], 0)?;
    for cert in c["certificates"].as_array().unwrap() {
        let v = &cert["verdict"];
        for check in ["rank", "zero_multiplicity", "integrality", "bound", "sign_multiplicity"] {
            ensure(v[check]["passed"] == true, format!("class {} check {check} failed", cert["class"]))?;
        }
        ensure(v["sign_bound_holds"] == true, "sign bound failed")?;
    }
    let took = within_time(start, Duration::from_secs(5))?;
    Ok(format!("165 points, k = (3, -3, 1), all certificate checks pass, {took:.2?}"))
}

fn certificate_rank_caps() -> Outcome {
    let opts = CertificateOptions::default();
    let mut checked = 0;
    for (name, x) in bundled() {
        let c = certify(&x, SettingChoice::Auto, true, None, 1e-9, &opts).map_err(|e| format!("{name}: {e}"))?;
        for cert in &c.certificates {
            let tag = format!("{name} {} class {}", cert.setting, cert.class);
            ensure(
                cert.numeric_rank as u128 <= cert.n_cap,
                format!("{tag}: rank {} > N = {}", cert.numeric_rank, cert.n_cap),
            )?;
            if let Some(v) = &cert.verdict {
                if v.n as u128 >= 2 * cert.n_cap {
                    ensure(
                        v.zero_multiplicity.measured >= cert.n_cap as f64,
                        format!("{tag}: zero multiplicity {} < N", v.zero_multiplicity.measured),
                    )?;
                }
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} indicator matrices across {} sets", bundled().len()))
}

fn e8_antipodal_suite() -> Outcome {
    let start = Instant::now();
    let x = construct_named(NamedConfig::E8Roots).map_err(|e| e.to_string())?;
    ensure(x.len() == 240, "E8 does not have 240 roots")?;
    let a = analyze(&x, &AnalyzeOptions::default()).map_err(|e| e.to_string())?;
    let v1 = a.report(Setting::AntipodalEvenV1).ok_or("no even v1 report")?;
    let v2 = a.report(Setting::AntipodalEvenV2).ok_or("no even v2 report")?;
    ensure(v1.context.s == 4, "s != 4")?;
    ensure(v1.rounded_k == vec![Some(-3), Some(4)], format!("v1 = {:?}", v1.k_values))?;
    ensure(v2.rounded_k == vec![Some(2)], format!("v2 = {:?}", v2.k_values))?;
    let u36 = ratio_bound_u(36).map_err(|e| e.to_string())?;
    ensure(u36 == 4 && v1.context.ratio_bound == 4, format!("U(36) = {u36}"))?;
    ensure(v1.rounded_k[1].unwrap().unsigned_abs() == u36, "|k_2| != U(36)")?;
    let betas = rational_inner_products(&v1.k_values, &v2.k_values, Parity::Even, 1e-6).map_err(|e| e.to_string())?;
    ensure(betas == vec![Ratio::new(1, 2)], format!("beta = {betas:?}"))?;
    let rational = a.rational_inner_products.as_ref().ok_or("no rational report")?;
    ensure(rational.hypothesis_met && rational.threshold == 146, "rational hypothesis")?;
    ensure(!a.theorem_violated(), "theorem flagged as violated")?;
    let took = within_time(start, Duration::from_secs(10))?;
    Ok(format!("v1 = (-3, 4), v2 = (2), U(36) = 4, beta_2 = 1/2, {took:.2?}"))
}

fn negative_controls() -> Outcome {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    for (name, setting, expected, threshold) in [
        ("pentagon", "euclidean", 1.618034, 8),
        ("icosahedron", "spherical", 2.236068, 18),
    ] {
        let file = dir.path().join(format!("{name}.json"));
        let path = file.to_str().unwrap();
        ensure(sdistance(&["construct", name, "-o", path]).status.success(), "construct failed")?;
        let v = cli_json(&["ratios", path, "--setting", setting], 0)?;
        let r = &v["reports"][0];
        ensure(r["hypothesis_met"] == false, format!("{name}: hypothesis met"))?;
        ensure(r["context"]["cardinality_threshold"] == threshold, format!("{name}: threshold"))?;
        let ks: Vec<f64> = r["k_values"].as_array().unwrap().iter().map(|k| k.as_f64().unwrap()).collect();
        let hit = ks.iter().find(|k| (*k - expected).abs() < 1e-6).ok_or(format!("{name}: k = {ks:?}"))?;
        let i = ks.iter().position(|k| k == hit).unwrap();
        ensure(r["integrality"][i] == false, format!("{name}: flagged integral"))?;
        detail.push(format!("{name} k = {hit:.6} non-integral, exit 0"));
    }
    Ok(detail.join("; "))
}

fn inversion_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut worst_trip, mut worst_fd, mut worst_det, mut worst_lu) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut worst_sum_rel, mut worst_sum_abs) = (0.0f64, 0.0f64);
    for s in 2..=6 {
        for sample in 0..1000 {
            let t = random_t(s, &mut rng);
            let tuple = SquaredDistanceTuple::new(t.clone()).unwrap();
            let tag = format!("s = {s}, sample {sample}, t = {t:?}");

            let all = forward_all(&tuple);
            for (i, k) in all.iter().enumerate() {
                ensure(k.signum() == if i % 2 == 0 { 1.0 } else { -1.0 }, format!("{tag}: sign of K_{}", i + 1))?;
            }
            let scale = all.iter().map(|k| k.abs()).fold(1.0, f64::max);
            let sum_err = (all.iter().sum::<f64>() - 1.0).abs();
            worst_sum_abs = worst_sum_abs.max(sum_err);
            worst_sum_rel = worst_sum_rel.max(sum_err / scale);

            let k = forward_k(&tuple).k;
            let inv = invert_k(&k, &InvertOptions::default()).map_err(|e| format!("{tag}: {e}"))?;
            let trip = inv.t.values().iter().zip(&t).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst_trip = worst_trip.max(trip);

            let jac = jacobian(&tuple);
            let gap = std::iter::once(0.0)
                .chain(t.iter().copied())
                .chain(std::iter::once(1.0))
                .collect::<Vec<_>>()
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(1.0, f64::min);
            let h = 1e-5 * gap;
            let fd = DMatrix::from_fn(s - 1, s - 1, |i, j| {
                let mut up = t.clone();
                let mut down = t.clone();
                up[j] += h;
                down[j] -= h;
                let ku = forward_k(&SquaredDistanceTuple::new(up).unwrap()).k[i];
                let kd = forward_k(&SquaredDistanceTuple::new(down).unwrap()).k[i];
                (ku - kd) / (2.0 * h)
            });
            worst_fd = worst_fd.max((&jac - &fd).norm() / jac.norm());

            let closed = jacobian_det_closed(&tuple);
            let exact = jacobian_det_exact(&tuple);
            worst_det = worst_det.max((exact - closed).abs() / closed.abs());
            worst_lu = worst_lu.max((jac.determinant() - closed).abs() / closed.abs());
        }
    }
    ensure(worst_trip < 1e-8, format!("round trip error {worst_trip:e}"))?;
    ensure(worst_fd < 1e-6, format!("Jacobian vs finite differences {worst_fd:e}"))?;
    ensure(worst_det < 1e-9, format!("determinant closed form {worst_det:e}"))?;
    ensure(worst_sum_rel < 1e-10, format!("sum of K off by {worst_sum_rel:e} relative to max |K|"))?;
    let took = within_time(start, Duration::from_secs(60))?;
    Ok(format!(
        "5000 samples: round trip {worst_trip:.1e}, Jacobian {worst_fd:.1e}, det {worst_det:.1e} \
         (f64 LU {worst_lu:.1e}), \
         sum K {worst_sum_rel:.1e} (relative to max |K|; absolute {worst_sum_abs:.1e}), {took:.2?}"
    ))
}

fn s3_closed_form() -> Outcome {
    let cf = invert_s3_closed(6.0, -8.0).map_err(|e| e.to_string())?;
    ensure((cf.t1 - 0.5).abs() < 1e-12 && (cf.t2 - 0.75).abs() < 1e-12, format!("({}, {})", cf.t1, cf.t2))?;
    ensure(cf.branch_t1 == Branch::Plus && cf.branch_t2 == Branch::Minus, "unexpected branches")?;
    ensure(matches!(invert_s3_closed(3.0, -3.0), Err(Error::Singular(_))), "(3, -3) is not singular")?;
    let inv = invert_k(&[3.0, -3.0], &InvertOptions::default()).map_err(|e| e.to_string())?;
    let t = inv.t.values();
    ensure((t[0] - 1.0 / 3.0).abs() < 1e-10 && (t[1] - 2.0 / 3.0).abs() < 1e-10, format!("{t:?}"))?;
    Ok("(6, -8) -> (1/2, 3/4) on branches (+, -); (3, -3) singular, Newton gives (1/3, 2/3)".into())
}

fn enumeration_finiteness() -> Outcome {
    // independent oracle: the full box [-6, 6]^2 filtered by the constraints
    let bound = ratio_bound_u(77).map_err(|e| e.to_string())? as i64;
    let mut oracle = 0;
    for k1 in -bound..=bound {
        for k2 in -bound..=bound {
            let k3 = 1 - k1 - k2;
            let ok = [k1, k2, k3].iter().zip([1, -1, 1]).all(|(&k, sign)| k * sign >= 1 && k.abs() <= bound);
            oracle += ok as usize;
        }
    }
    let catalog = realize_catalog(enumerate_tuples(10, 3, DEFAULT_TUPLE_CAP).map_err(|e| e.to_string())?);
    ensure(catalog.tuples.len() == oracle, format!("{} tuples, oracle {oracle}", catalog.tuples.len()))?;
    ensure(oracle == 21, format!("oracle counted {oracle}"))?;
    match &catalog.find(&[3, -3]).ok_or("(3, -3) missing")?.realization {
        Some(Realization::Realized { t, .. }) => ensure(
            (t[0] - 1.0 / 3.0).abs() < 1e-10 && (t[1] - 2.0 / 3.0).abs() < 1e-10,
            format!("(3, -3) realized at {t:?}"),
        )?,
        other => return Err(format!("(3, -3) status {other:?}")),
    }
    let args = ["enumerate", "-d", "10", "-s", "3", "--realize"];
    let (a, b) = (sdistance(&args), sdistance(&args));
    ensure(a.status.success() && a.stdout == b.stdout, "CLI output differs between runs")?;
    let counts = catalog.counts();
    Ok(format!(
        "21 tuples (oracle agrees), {} realized, {} unrealizable, {} newton_failed; byte-identical JSON",
        counts.realized, counts.unrealizable, counts.newton_failed
    ))
}

fn sign_matrix_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for trial in 0..1000 {
        let n = rng.gen_range(2..=30);
        let mut d = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in (a + 1)..n {
                let v = [-1.0, 0.0, 1.0][rng.gen_range(0..3)];
                d[(a, b)] = v;
                d[(b, a)] = v;
            }
        }
        let spec = eigen_multiplicities(&d, 1e-6, 1e-8).map_err(|e| e.to_string())?;
        let (mut e, mut m) = (0.0, spec.zero_multiplicity);
        for c in &spec.clusters {
            if c.multiplicity > m {
                (e, m) = (c.value, c.multiplicity);
            }
        }
        let holds = verify_sign_matrix_bound(&d, e, m).map_err(|err| format!("trial {trial}: {err}"))?;
        ensure(holds, format!("trial {trial}: n = {n}, e = {e}, m = {m}"))?;
    }
    Ok("1000 random symmetric 0/+-1 matrices, n <= 30".into())
}

fn embedding_round_trip() -> Outcome {
    let mut names = Vec::new();
    for (name, x) in bundled() {
        let c = SquaredDistanceMatrix::from_points(&x);
        let v = euclidean_embeddable(&c, x.dimension(), DEFAULT_TOL_PSD).map_err(|e| format!("{name}: {e}"))?;
        ensure(v.embeddable, format!("{name}: not embeddable"))?;
        let err = v.reconstruction_error.unwrap_or(f64::INFINITY);
        ensure(err < 1e-8, format!("{name}: reconstruction error {err:e}"))?;
        let r = v.realization.ok_or(format!("{name}: no realization"))?;
        match congruent(&x, &r, DEFAULT_CONGRUENCE_TOL).map_err(|e| format!("{name}: {e}"))? {
            Congruence::Congruent { .. } => names.push(format!("{name} ({})", x.len())),
            other => return Err(format!("{name}: {other:?}")),
        }
    }
    Ok(format!("congruent realizations for {}", names.join(", ")))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 9] = [
        ("1 Johnson reproduction", johnson_reproduction),
        ("2 certificate rank caps", certificate_rank_caps),
        ("3 E8 antipodal suite", e8_antipodal_suite),
        ("4 negative controls", negative_controls),
        ("5 inversion suite", inversion_suite),
        ("6 s=3 closed form", s3_closed_form),
        ("7 enumeration finiteness", enumeration_finiteness),
        ("8 sign-matrix eigenvalue bound", sign_matrix_bound),
        ("9 embedding round trip", embedding_round_trip),
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr();
    for (name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let line = match &outcome {
            Ok(detail) => format!("[PASS] {name}: {detail}"),
            Err(why) => {
                failed.push(name);
                format!("[FAIL] {name}: {why}")
            }
        };
        writeln!(err, "{line}").unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

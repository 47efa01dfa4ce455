//! Acceptance checks, one line per criterion. Run with
//! `cargo test --release --test acceptance`.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use serde::Deserialize;
use straddled::analysis::{detect_convergence, epoch_means, settling_epoch, summarise, welch_test, LossKind};
use straddled::cli::{cmd_analyze, cmd_run, ConfigSource, RunOptions};
use straddled::experiment::{builtin_config, run_experiment, DatasetSource, Preset};
use straddled::gradcheck::check_gradients;
use straddled::initialisers::{identity_padded, recurrent_identity, straddled};
use straddled::network::{build_autoencoder, Activation, DenseLayer, DEFAULT_HIDDEN};
use straddled::numerics::{frobenius_norm, sample_uniform, transpose, Matrix, Rng};
use straddled::report::parse_runs_csv;
use straddled::{Autoencoder, BatchSize, InitialiserKind, InitialiserSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn ones(m: usize, n: usize, positions: &[(usize, usize)]) -> Matrix {
    let mut w = Matrix::zeros(m, n);
    for &(i, j) in positions {
        w.set(i, j, 1.0);
    }
    w
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.1?}, limit {limit:?}"))
}

fn construction() -> Outcome {
    let start = Instant::now();
    let cases = [
        ("straddled 8x3", straddled(8, 3), ones(8, 3, &[(0, 0), (1, 1), (2, 2), (3, 0), (4, 1), (5, 2), (6, 0), (7, 1)])),
        ("straddled 5x3", straddled(5, 3), ones(5, 3, &[(0, 0), (1, 1), (2, 2), (3, 0), (4, 1)])),
        ("straddled 3x5", straddled(3, 5), ones(3, 5, &[(0, 0), (1, 1), (2, 2)])),
        ("identity 8x3", identity_padded(8, 3), ones(8, 3, &[(0, 0), (1, 1), (2, 2)])),
        ("recurrent 8x3", recurrent_identity(8, 3), ones(8, 3, &[(0, 0), (1, 1), (2, 2), (3, 0), (4, 1), (5, 2)])),
    ];
    for (name, got, want) in &cases {
        ensure(got == want, || format!("{name} differs"))?;
    }
    for m in 1..=12 {
        for n in 1..=12 {
            let same = recurrent_identity(m, n) == straddled(m, n);
            ensure(same == (m >= n && m % n == 0), || format!("iff fails at ({m}, {n})"))?;
        }
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("5 figure matrices exact, 144 shapes checked in {:.1?}", start.elapsed()))
}

fn norms() -> Outcome {
    let (wide, tall) = (straddled(3, 5), straddled(5, 3));
    let (nw, nt) = (frobenius_norm(&wide), frobenius_norm(&tall));
    ensure(nw == 3f64.sqrt() && nt == 5f64.sqrt(), || format!("norms {nw}, {nt}"))?;
    ensure(transpose(&tall) != wide, || "3x5 equals transpose of 5x3".into())?;
    Ok(format!("|3x5| = {nw}, |5x3| = {nt}, not transposes"))
}

fn perfect_reconstruction() -> Outcome {
    let layers = (0..4).map(|_| DenseLayer::new(Matrix::identity(16), Activation::Relu)).collect();
    let model = Autoencoder::new(layers).map_err(err)?;
    let x = sample_uniform(&mut Rng::new(0), 1000, 16, 0.0, 1.0).map_err(err)?;
    let loss = model.evaluate(&x).map_err(err)?;
    ensure(loss == 0.0, || format!("RMSE {loss}"))?;
    Ok("RMSE 0 on 1000x16 rows at epoch 0".into())
}

fn first_pass_linearity() -> Outcome {
    let model = build_autoencoder(100, &DEFAULT_HIDDEN, &InitialiserKind::Straddled.into(), &mut Rng::new(0))
        .map_err(err)?;
    let x = sample_uniform(&mut Rng::new(1), 200, 100, 0.0, 1.0).map_err(err)?;
    let trace = model.forward(&x).map_err(err)?;
    for k in 0..3 {
        ensure(trace.pre_activations[k] == trace.activations[k], || format!("layer {k} is not linear"))?;
    }
    let mut worst = 0.0f64;
    for r in 0..x.rows() {
        let mut v = x.row(r).to_vec();
        for layer in model.layers() {
            let w = &layer.weights;
            v = (0..w.cols()).map(|j| (0..w.rows()).map(|i| v[i] * w.get(i, j)).sum()).collect();
        }
        for (a, b) in trace.pre_activations[3].row(r).iter().zip(&v) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst < 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("hidden pre == post, output deviation {worst:e}"))
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let mut rng = Rng::new(5);
    let mut worst = 0.0f64;
    let models = 150;
    for i in 0..models {
        let input = 2 + (rng.next_f64() * 7.0) as usize;
        let hidden: Vec<usize> = (0..3).map(|_| 1 + (rng.next_f64() * 6.0) as usize).collect();
        let mut model = build_autoencoder(input, &hidden, &InitialiserSpec::random_normal(0.5), &mut rng).map_err(err)?;
        for layer in model.layers_mut() {
            for b in &mut layer.bias {
                *b = rng.next_f64() * 0.2 - 0.1;
            }
        }
        let x = sample_uniform(&mut rng, 2 + i % 7, input, 0.0, 1.0).map_err(err)?;
        worst = worst.max(check_gradients(&model, &x, 1e-5).map_err(err)?.max_relative_error);
    }
    ensure(worst < 1e-4, || format!("worst relative error {worst:e}"))?;
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("{models} models, worst relative error {worst:.2e}, {:.1?}", start.elapsed()))
}

/// Series and ε are multiples of 1/64, so `|Δ| ≤ ε` is exact.
fn oracle_convergence(series: &[f64], eps: f64, alpha: usize) -> Option<usize> {
    (0..series.len() - alpha).find(|&t| (t + 1..=t + alpha).all(|u| (series[u] - series[t]).abs() <= eps))
}

fn convergence() -> Outcome {
    let constant = detect_convergence(&[0.4; 6], 0.0, 3).map_err(err)?;
    ensure(constant.epoch == Some(0), || "constant series".into())?;
    let eps = 0.01;
    let falling: Vec<f64> = (0..10).map(|e| 1.0 - 2.0 * eps * e as f64).collect();
    ensure(!detect_convergence(&falling, eps, 2).map_err(err)?.converged, || "decreasing series".into())?;
    let plateau = detect_convergence(&[1.0, 0.5, 0.3, 0.3005, 0.2996, 0.3001, 0.3], 0.001, 4).map_err(err)?;
    ensure(plateau.epoch == Some(2) && plateau.loss == Some(0.3), || format!("plateau {plateau:?}"))?;

    let mut rng = Rng::new(6);
    for case in 0..1000 {
        let len = 5 + (rng.next_f64() * 40.0) as usize;
        let series: Vec<f64> = (0..len).map(|_| 0.125 + (rng.next_f64() * 30.0).floor() / 64.0).collect();
        let eps = (rng.next_f64() * 5.0).floor() / 64.0;
        let alpha = 1 + (rng.next_f64() * (len as f64 - 2.0)) as usize;
        let base = detect_convergence(&series, eps, alpha).map_err(err)?.epoch;
        ensure(base == oracle_convergence(&series, eps, alpha), || format!("series {case} not minimal"))?;
        let wider = detect_convergence(&series, eps + 1.0 / 64.0, alpha).map_err(err)?.epoch;
        if let Some(t) = base {
            ensure(wider.is_some_and(|w| w <= t), || format!("series {case}: eps monotonicity"))?;
        }
        if alpha + 1 < len {
            let longer = detect_convergence(&series, eps, alpha + 1).map_err(err)?.epoch;
            let ok = match (base, longer) {
                (Some(t), Some(l)) => l >= t,
                (None, Some(_)) => false,
                _ => true,
            };
            ensure(ok, || format!("series {case}: alpha monotonicity"))?;
        }
    }
    Ok("3 examples exact, 1000 random series minimal and monotone".into())
}

#[derive(Deserialize)]
struct WelchCase {
    a: Vec<f64>,
    b: Vec<f64>,
    p: f64,
}

#[derive(Deserialize)]
struct WelchFixture {
    cases: Vec<WelchCase>,
}

fn statistics() -> Outcome {
    let fixture: WelchFixture =
        serde_json::from_str(include_str!("data/welch_reference.json")).map_err(err)?;
    let mut worst = 0.0f64;
    let mut worst_sum = 0.0f64;
    for case in &fixture.cases {
        let ab = welch_test(&case.a, &case.b).map_err(err)?;
        let ba = welch_test(&case.b, &case.a).map_err(err)?;
        worst = worst.max((ab.p_value - case.p).abs());
        worst_sum = worst_sum.max((ab.p_value + ba.p_value - 1.0).abs());
    }
    ensure(worst < 1e-9, || format!("max p deviation {worst:e}"))?;
    ensure(worst_sum < 1e-12, || format!("complementarity off by {worst_sum:e}"))?;
    Ok(format!("{} fixtures, max deviation {worst:.1e}, complementarity {worst_sum:.1e}", fixture.cases.len()))
}

fn synthetic_ordering() -> Outcome {
    let start = Instant::now();
    let mut cfg = builtin_config(Preset::Synthetic);
    cfg.dataset = DatasetSource::Synthetic { records: 500, latent_dim: 20, features: 100, seed: 0 };
    cfg.epochs = 300;
    cfg.runs = 3;
    cfg.convergence_alpha = 100;
    cfg.initialisers = [
        InitialiserKind::Straddled,
        InitialiserKind::GlorotUniform,
        InitialiserKind::GlorotNormal,
        InitialiserKind::Orthogonal,
    ]
    .into_iter()
    .map(InitialiserSpec::new)
    .collect();
    let outcome = run_experiment(&cfg).map_err(err)?;
    let means = epoch_means(&outcome.logs, LossKind::Train).map_err(err)?;
    let stats: Vec<(String, f64, Option<usize>)> = means
        .iter()
        .map(|s| (s.initialiser.clone(), *s.mean.last().unwrap(), settling_epoch(&s.mean, 0.005)))
        .collect();
    let (_, ref_loss, ref_settle) = stats[0].clone();
    let ref_settle = ref_settle.ok_or("straddled never settles")?;
    let mut detail = format!("straddled {ref_loss:.4}@{ref_settle}");
    for (name, loss, settle) in &stats[1..] {
        detail.push_str(&format!(", {name} {loss:.4}@{}", settle.map_or("-".into(), |s| s.to_string())));
        ensure(ref_loss <= *loss, || format!("{name} final loss lower: {detail}"))?;
        ensure(settle.is_none_or(|s| ref_settle < s), || format!("{name} settles sooner: {detail}"))?;
    }
    within(start.elapsed(), Duration::from_secs(300))?;
    Ok(format!("{detail} (loss@settling epoch), {:.1?}", start.elapsed()))
}

fn mnist_ordering() -> Outcome {
    let start = Instant::now();
    let mut cfg = builtin_config(Preset::Mnist);
    cfg.dataset = DatasetSource::Mnist {
        images_paths: vec![Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/mnist-2k-images-idx3-ubyte")],
        limit: Some(2000),
        original_split: false,
    };
    cfg.batch_size = BatchSize::Rows(256);
    cfg.epochs = 100;
    cfg.runs = 3;
    cfg.convergence_alpha = 25;
    cfg.initialisers = [InitialiserKind::Straddled, InitialiserKind::Identity, InitialiserKind::RandomNormal]
        .into_iter()
        .map(InitialiserSpec::new)
        .collect();
    let outcome = run_experiment(&cfg).map_err(err)?;
    let finals: Vec<(String, f64)> = epoch_means(&outcome.logs, LossKind::Train)
        .map_err(err)?
        .into_iter()
        .map(|s| (s.initialiser, *s.mean.last().unwrap()))
        .collect();
    let detail = finals.iter().map(|(n, l)| format!("{n} {l:.4}")).collect::<Vec<_>>().join(", ");
    for (name, loss) in &finals[1..] {
        ensure(finals[0].1 < *loss, || format!("{name} not beaten: {detail}"))?;
    }
    within(start.elapsed(), Duration::from_secs(600))?;
    Ok(format!("{detail}, {:.1?}", start.elapsed()))
}

fn preset_smoke() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(err)?;
    let bundle = cmd_run(&RunOptions::new(ConfigSource::Preset(Preset::Synthetic), dir.path())).map_err(err)?;
    let cfg = builtin_config(Preset::Synthetic);

    let runs_text = std::fs::read_to_string(&bundle.runs).map_err(err)?;
    let logs = parse_runs_csv(&runs_text, &bundle.runs).map_err(err)?;
    ensure(logs.len() == 80 && logs.iter().all(|l| l.epochs() == 1000), || {
        format!("{} runs logged", logs.len())
    })?;
    let summary_text = std::fs::read_to_string(&bundle.summary).map_err(err)?;
    let summary: serde_json::Value = serde_json::from_str(&summary_text).map_err(err)?;
    ensure(summary["rows"].as_array().is_some_and(|r| r.len() == 8), || "summary rows".into())?;
    let svg = std::fs::read_to_string(&bundle.plot).map_err(err)?;
    ensure(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>") && svg.matches("<polyline").count() == 8, || {
        "malformed svg".into()
    })?;
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&bundle.metadata).map_err(err)?).map_err(err)?;
    ensure(meta["prng"].is_string() && meta["dataset"]["split_checksum"].is_string(), || "metadata fields".into())?;

    let again = cmd_analyze(&bundle.runs, cfg.convergence_epsilon, cfg.convergence_alpha, LossKind::Train, None)
        .map_err(err)?;
    ensure(again == summary_text, || "re-analysed summary differs".into())?;
    let reference = summarise(&logs, cfg.convergence_epsilon, cfg.convergence_alpha, LossKind::Train).map_err(err)?;
    let straddled_row = &reference.rows[0];
    Ok(format!(
        "80 runs x 1000 epochs, summary reproduced byte-identically; straddled converged at {:?}, {:.1?}",
        straddled_row.convergence.epoch,
        start.elapsed()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("construction fidelity", construction),
        ("norm/transpose", norms),
        ("zero-training reconstruction", perfect_reconstruction),
        ("first-pass linearity", first_pass_linearity),
        ("gradient correctness", gradients),
        ("convergence detector", convergence),
        ("statistics", statistics),
        ("synthetic ordering", synthetic_ordering),
        ("MNIST ordering", mnist_ordering),
        ("full-preset smoke", preset_smoke),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        match check() {
            Ok(detail) => println!("criterion {id:2} PASS {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("criterion {id:2} FAIL {name}: {reason}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use linkx::homophily::{edge_homophily, improved_homophily};
use linkx::kernel::{dsmm, gradcheck, matmul, spmm, DenseMatrix, SparseMatrix};
use linkx::models::{
    concat_mlp_forward, flatten_grads, linkx_forward, AdjacencyBatch, Architecture, Model, ModelKind, NodeBatch,
};
use linkx::rng::{stream, Stream};
use linkx::synth::{
    generate_er_labeled, generate_pattern, generate_two_channel, AdjacencySignal, FeatureSignal, PatternKind,
    TwoChannelConfig,
};
use linkx::train::{
    default_grid, make_splits, mean_std, train_splits, BatchPolicy, HyperParams, ModelOptions, Predictor, Prepared,
    TrainConfig,
};
use linkx::{build_graph, Dataset, Graph};

type Outcome = Result<(bool, String), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("figure-5 exactness", figure5),
        ("class-imbalance null model", class_imbalance),
        ("gradient correctness", gradients),
        ("oracle equivalence", oracles),
        ("minibatch/full-batch equivalence", minibatch),
        ("model ordering", model_ordering),
        ("complexity contract", complexity),
        ("determinism from manifest", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        println!("criterion {} {name}: {} [{detail}] ({secs:.2}s)", i + 1, if pass { "PASS" } else { "FAIL" });
        failures += usize::from(!pass);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}

fn figure5() -> Outcome {
    let start = Instant::now();
    let cases = [
        ("a", PatternKind::PureHomophily, 6, 2, (1.0, 1.0)),
        ("b", PatternKind::PureHeterophily, 6, 2, (0.0, 0.0)),
        ("c", PatternKind::OnePerClass, 4, 2, (0.5, 0.0)),
        ("d", PatternKind::OnePerClass, 6, 3, (1.0 / 3.0, 0.0)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (tag, kind, n, c, (h_want, hhat_want)) in cases {
        let d = generate_pattern(kind, n, c).map_err(err)?;
        let h = edge_homophily(&d.graph, &d.labels).map_err(err)?;
        let hhat = improved_homophily(&d.graph, &d.labels).map_err(err)?;
        pass &= (h - h_want).abs() <= 1e-12 && (hhat - hhat_want).abs() <= 1e-12;
        parts.push(format!("({tag}) h={h:.6} ĥ={hhat:.6}"));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 1.0;
    Ok((pass, format!("{}; {secs:.3}s < 1s", parts.join(", "))))
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (m, var.sqrt())
}

/// Mean over 100 seeds must lie within three sample standard deviations of
/// the null expectation (the band shaded in the class-imbalance figure); the
/// standard-error z-scores are reported alongside.
fn class_imbalance() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for q in [0.5, 0.6, 0.7, 0.8, 0.9] {
        let (mut hs, mut hhats) = (Vec::new(), Vec::new());
        for seed in 0..100 {
            let d = generate_er_labeled(100, 0.25, &[q, 1.0 - q], seed).map_err(err)?;
            hs.push(edge_homophily(&d.graph, &d.labels).map_err(err)?);
            hhats.push(improved_homophily(&d.graph, &d.labels).map_err(err)?);
        }
        let (h, h_sd) = mean_sd(&hs);
        let (hhat, hhat_sd) = mean_sd(&hhats);
        let h_null = q * q + (1.0 - q) * (1.0 - q);
        pass &= (h - h_null).abs() <= 3.0 * h_sd && hhat.abs() <= 3.0 * hhat_sd;
        let z = |m: f64, target: f64, sd: f64| (m - target) / (sd / 10.0);
        parts.push(format!(
            "q={q}: h={h:.4} vs {h_null:.4} (sd {h_sd:.4}, z {:+.1}), ĥ={hhat:.4} (sd {hhat_sd:.4}, z {:+.1})",
            z(h, h_null, h_sd),
            z(hhat, 0.0, hhat_sd)
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 30.0;
    Ok((pass, format!("{}; {secs:.2}s < 30s", parts.join("; "))))
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, directed: bool) -> Result<Graph, String> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if (directed || u < v) && u != v && rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    build_graph(&edges, n, directed).map_err(err)
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn random_batch(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut nodes: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < 0.6).collect();
    if nodes.is_empty() {
        nodes.push(rng.random_range(0..n));
    }
    nodes
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let mut worst = Vec::new();
    let mut pass = true;
    for kind in [ModelKind::Mlp, ModelKind::Link, ModelKind::Linkx, ModelKind::ConcatMlp] {
        let mut kind_worst: f64 = 0.0;
        for i in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
            let n = 6 + 2 * i;
            let (dim, classes) = (3, 3);
            let graph = random_graph(&mut rng, n, 0.35, i % 2 == 1)?;
            let features = random_matrix(&mut rng, dim, n);
            let arch = match kind {
                ModelKind::Mlp => Architecture::Mlp { feature_dim: dim, hidden: 5, layers: 2 + i % 2, classes },
                ModelKind::Link => Architecture::Link { num_nodes: n, classes, bias: i % 2 == 0 },
                ModelKind::Linkx => Architecture::Linkx {
                    num_nodes: n,
                    feature_dim: dim,
                    hidden: 4,
                    classes,
                    adj_layers: 1 + i % 2,
                    feat_layers: 1 + (i / 2) % 2,
                    final_layers: 1 + i % 3,
                },
                _ => Architecture::ConcatMlp { num_nodes: n, feature_dim: dim, hidden: 4, layers: 1 + i % 3, classes },
            };
            let nodes = random_batch(&mut rng, n);
            let labels: Vec<usize> = nodes.iter().map(|_| rng.random_range(0..classes)).collect();
            let batch = NodeBatch::gather(&arch, &graph, &features, &nodes).map_err(err)?;
            let model = Model::<f64>::new(arch.clone(), &mut stream(i as u64, Stream::Init, 0)).map_err(err)?;
            let rel = gradcheck(
                |p: &[f64]| {
                    let m = Model::from_flat(arch.clone(), p)?;
                    let (loss, grads) = m.loss_and_grad(&batch, &labels)?;
                    Ok((loss, flatten_grads(&grads)))
                },
                &model.params().to_flat(),
                1e-5,
            )
            .map_err(err)?;
            kind_worst = kind_worst.max(rel);
        }
        pass &= kind_worst < 1e-5;
        worst.push(format!("{} {kind_worst:.1e}", kind.name()));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 10.0;
    Ok((pass, format!("max relative error {} (< 1e-5); {secs:.2}s < 10s", worst.join(", "))))
}

/// Dense adjacency with `a[u][v] = 1` for every stored entry `u → v`.
fn dense_adjacency(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.num_nodes();
    let mut a = vec![vec![0.0; n]; n];
    for (u, v) in g.entries() {
        a[u][v] = 1.0;
    }
    a
}

fn param(model: &Model<f64>, name: &str) -> Result<DenseMatrix<f64>, String> {
    let i = model.params().find(name).ok_or_else(|| format!("missing parameter {name}"))?;
    Ok(model.params().value(i).clone())
}

fn affine(w: &DenseMatrix<f64>, b: Option<&DenseMatrix<f64>>, x: &[f64]) -> Vec<f64> {
    (0..w.rows())
        .map(|r| (0..w.cols()).map(|c| w.get(r, c) * x[c]).sum::<f64>() + b.map_or(0.0, |b| b.get(r, 0)))
        .collect()
}

fn relu(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| x.max(0.0)).collect()
}

/// Stack of `layers` linear maps named `{prefix}layer{i}`, ReLU between them.
fn dense_mlp(model: &Model<f64>, prefix: &str, first: usize, layers: usize, mut x: Vec<f64>) -> Result<Vec<f64>, String> {
    for i in first..first + layers {
        let w = param(model, &format!("{prefix}layer{i}.weight"))?;
        let b = param(model, &format!("{prefix}layer{i}.bias"))?;
        x = affine(&w, Some(&b), &x);
        if i + 1 < first + layers {
            x = relu(x);
        }
    }
    Ok(x)
}

fn column(a: &[Vec<f64>], j: usize) -> Vec<f64> {
    a.iter().map(|row| row[j]).collect()
}

fn linkx_oracle(model: &Model<f64>, a: &[Vec<f64>], x: &DenseMatrix<f64>, nodes: &[usize]) -> Result<Vec<Vec<f64>>, String> {
    let Architecture::Linkx { adj_layers, feat_layers, final_layers, .. } = *model.architecture() else {
        return Err("not a LINKX model".into());
    };
    let mix = param(model, "mix.weight")?;
    nodes
        .iter()
        .map(|&j| {
            let ha = dense_mlp(model, "adj.", 0, adj_layers, column(a, j))?;
            let hx = dense_mlp(model, "feat.", 0, feat_layers, x.column(j))?;
            let stacked: Vec<f64> = ha.iter().chain(&hx).copied().collect();
            let mixed: Vec<f64> = affine(&mix, None, &stacked).iter().zip(&ha).zip(&hx).map(|((m, a), b)| m + a + b).collect();
            dense_mlp(model, "final.", 0, final_layers, relu(mixed))
        })
        .collect()
}

fn concat_oracle(model: &Model<f64>, a: &[Vec<f64>], x: &DenseMatrix<f64>, nodes: &[usize]) -> Result<Vec<Vec<f64>>, String> {
    let Architecture::ConcatMlp { layers, .. } = *model.architecture() else {
        return Err("not a concatenation MLP".into());
    };
    let (wa, wf, b) = (param(model, "layer0.weight_adj")?, param(model, "layer0.weight_feat")?, param(model, "layer0.bias")?);
    nodes
        .iter()
        .map(|&j| {
            let z: Vec<f64> = affine(&wa, Some(&b), &column(a, j)).iter().zip(affine(&wf, None, &x.column(j))).map(|(p, q)| p + q).collect();
            if layers == 1 {
                Ok(z)
            } else {
                dense_mlp(model, "", 1, layers - 1, relu(z))
            }
        })
        .collect()
}

fn max_diff(out: &DenseMatrix<f64>, oracle: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, col) in oracle.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            worst = worst.max((out.get(r, j) - v).abs());
        }
    }
    worst
}

fn oracles() -> Outcome {
    let start = Instant::now();
    let (mut linkx_worst, mut concat_worst, mut sparse_worst): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for n in 1..=64usize {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let p = rng.random_range(0.02..0.4);
        let graph = random_graph(&mut rng, n, p, n % 3 == 0)?;
        let a = dense_adjacency(&graph);
        let dim = 1 + n % 4;
        let features = random_matrix(&mut rng, dim, n);
        let nodes = random_batch(&mut rng, n);
        let adjacency = AdjacencyBatch::from_rows(graph.adjacency_rows::<f64>(&nodes).map_err(err)?);
        let x = features.gather_columns(&nodes);

        let arch = Architecture::Linkx {
            num_nodes: n,
            feature_dim: dim,
            hidden: 2 + n % 5,
            classes: 2 + n % 3,
            adj_layers: 1 + n % 2,
            feat_layers: 1 + (n / 2) % 2,
            final_layers: 1 + n % 3,
        };
        let model = Model::<f64>::new(arch, &mut stream(n as u64, Stream::Init, 1)).map_err(err)?;
        let out = linkx_forward(&model, &adjacency, &x).map_err(err)?;
        linkx_worst = linkx_worst.max(max_diff(&out, &linkx_oracle(&model, &a, &features, &nodes)?));

        let concat_dim = n % 4;
        let features = random_matrix(&mut rng, concat_dim, n);
        let arch = Architecture::ConcatMlp {
            num_nodes: n,
            feature_dim: concat_dim,
            hidden: 2 + n % 5,
            layers: 1 + n % 3,
            classes: 2 + n % 3,
        };
        let model = Model::<f64>::new(arch, &mut stream(n as u64, Stream::Init, 2)).map_err(err)?;
        let out = concat_mlp_forward(&model, &adjacency, &features.gather_columns(&nodes)).map_err(err)?;
        concat_worst = concat_worst.max(max_diff(&out, &concat_oracle(&model, &a, &features, &nodes)?));

        for (rows, k) in [(n, 1), (n, 5), (n.div_ceil(2), 3)] {
            let density = rng.random_range(0.0..0.5);
            let mut triplets = Vec::new();
            for r in 0..rows {
                for c in 0..n {
                    if rng.random::<f64>() < density {
                        triplets.push((r, c, rng.random_range(-2.0..2.0)));
                    }
                }
            }
            let s = SparseMatrix::from_triplets(rows, n, &triplets).map_err(err)?;
            let dense = s.to_dense();
            let b = random_matrix(&mut rng, n, k);
            sparse_worst = sparse_worst.max(spmm(&s, &b).map_err(err)?.max_abs_diff(&matmul(&dense, &b).map_err(err)?));
            let left = random_matrix(&mut rng, k, rows);
            sparse_worst = sparse_worst.max(dsmm(&left, &s).map_err(err)?.max_abs_diff(&matmul(&left, &dense).map_err(err)?));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = linkx_worst <= 1e-12 && concat_worst <= 1e-12 && sparse_worst <= 1e-12 && secs < 10.0;
    Ok((
        pass,
        format!(
            "n=1..64: LINKX {linkx_worst:.1e}, concat-MLP {concat_worst:.1e}, spmm/dsmm {sparse_worst:.1e} (<= 1e-12); {secs:.2}s < 10s"
        ),
    ))
}

fn two_channel(strength: f64, noise: Option<f64>) -> Result<Dataset, String> {
    let mut cfg = TwoChannelConfig::new(2000, 3, 1);
    cfg.adjacency_signal = AdjacencySignal::Monophilous;
    cfg.strength = strength;
    if let Some(noise) = noise {
        cfg.feature_signal = FeatureSignal::Gaussian;
        cfg.noise = noise;
    }
    Ok(generate_two_channel(&cfg).map_err(err)?.dataset)
}

fn mean_test(ds: &Dataset, kind: ModelKind, grid: &[HyperParams], batch: BatchPolicy) -> Result<f64, String> {
    let data = Prepared::<f64>::new(ds, kind, ModelOptions::default(), false).map_err(err)?;
    let splits = make_splits(ds.num_nodes(), 0, 5).map_err(err)?;
    let cfg = TrainConfig { batch, ..TrainConfig::new(7) };
    let runs = train_splits(&data, &splits, grid, &cfg).map_err(err)?;
    Ok(mean_std(&runs.iter().map(|r| r.metrics.test).collect::<Vec<_>>()).0)
}

fn linkx_grid() -> Vec<HyperParams> {
    vec![HyperParams::Linkx { hidden: 16, final_layers: 1 }, HyperParams::Linkx { hidden: 32, final_layers: 1 }]
}

fn minibatch() -> Outcome {
    let ds = two_channel(0.9, None)?;
    let split = &make_splits(ds.num_nodes(), 0, 1).map_err(err)?[..];
    let mut identical = true;
    for kind in [ModelKind::Mlp, ModelKind::Link, ModelKind::Linkx] {
        let data = Prepared::<f64>::new(&ds, kind, ModelOptions::default(), false).map_err(err)?;
        let grid = &default_grid(kind)[..1];
        let params = |batch| -> Result<Vec<f64>, String> {
            let cfg = TrainConfig { epochs: 1, batch, ..TrainConfig::new(3) };
            match &train_splits(&data, split, grid, &cfg).map_err(err)?[0].predictor {
                Predictor::Trained(m) => Ok(m.params().to_flat()),
                Predictor::Propagated(_) => Err("expected a trained model".into()),
            }
        };
        let full = params(BatchPolicy::Full)?;
        let mini = params(BatchPolicy::Iid { fraction: 1.0 })?;
        identical &= full.iter().zip(&mini).all(|(a, b)| a.to_bits() == b.to_bits());
    }
    let full = mean_test(&ds, ModelKind::Linkx, &linkx_grid(), BatchPolicy::Full)?;
    let mini = mean_test(&ds, ModelKind::Linkx, &linkx_grid(), BatchPolicy::IID_DEFAULT)?;
    let gap = (full - mini).abs();
    Ok((
        identical && gap <= 0.03,
        format!(
            "fraction-1 first step bit-identical: {identical}; monophilous n=2000 LINKX full {:.2}% vs n/10 minibatch {:.2}% (gap {:.2} <= 3 points)",
            100.0 * full,
            100.0 * mini,
            100.0 * gap
        ),
    ))
}

/// Multinomial logistic regression by plain full-batch gradient descent over
/// sparse inputs (index/value lists per node).
fn logistic_oracle(inputs: &[Vec<(usize, f64)>], dim: usize, labels: &[usize], classes: usize, train: &[usize], test: &[usize]) -> f64 {
    let mut w = vec![vec![0.0; dim + 1]; classes];
    let logits = |w: &[Vec<f64>], u: usize| -> Vec<f64> {
        (0..classes).map(|k| w[k][dim] + inputs[u].iter().map(|&(i, v)| w[k][i] * v).sum::<f64>()).collect()
    };
    for _ in 0..400 {
        let mut grad = vec![vec![0.0; dim + 1]; classes];
        for &u in train {
            let z = logits(&w, u);
            let max = z.iter().cloned().fold(f64::MIN, f64::max);
            let e: Vec<f64> = z.iter().map(|x| (x - max).exp()).collect();
            let total: f64 = e.iter().sum();
            for k in 0..classes {
                let g = e[k] / total - f64::from(u8::from(labels[u] == k));
                grad[k][dim] += g;
                for &(i, v) in &inputs[u] {
                    grad[k][i] += g * v;
                }
            }
        }
        for k in 0..classes {
            for i in 0..=dim {
                w[k][i] -= 0.5 * grad[k][i] / train.len() as f64 + 1e-3 * w[k][i];
            }
        }
    }
    let correct = test
        .iter()
        .filter(|&&u| {
            let z = logits(&w, u);
            (0..classes).max_by(|&a, &b| z[a].total_cmp(&z[b]).then(b.cmp(&a))) == Some(labels[u])
        })
        .count();
    correct as f64 / test.len() as f64
}

fn channel_oracles(ds: &Dataset) -> Result<(f64, f64), String> {
    let split = &make_splits(ds.num_nodes(), 0, 1).map_err(err)?[0];
    let labels = ds.labels.values();
    let n = ds.num_nodes();
    let adjacency: Vec<Vec<(usize, f64)>> = (0..n).map(|u| ds.graph.in_neighbors(u).iter().map(|&v| (v, 1.0)).collect()).collect();
    let features: Vec<Vec<(usize, f64)>> =
        (0..n).map(|u| (0..ds.feature_dim()).map(|r| (r, ds.features.get(r, u))).collect()).collect();
    let c = ds.num_classes();
    Ok((
        logistic_oracle(&adjacency, n, labels, c, &split.train, &split.test),
        logistic_oracle(&features, ds.feature_dim(), labels, c, &split.train, &split.test),
    ))
}

fn model_ordering() -> Outcome {
    let mlp_grid = [HyperParams::Mlp { hidden: 16, layers: 2 }, HyperParams::Mlp { hidden: 32, layers: 2 }];
    let run = |ds: &Dataset| -> Result<(f64, f64, f64), String> {
        Ok((
            mean_test(ds, ModelKind::Link, &default_grid(ModelKind::Link), BatchPolicy::Full)?,
            mean_test(ds, ModelKind::Mlp, &mlp_grid, BatchPolicy::Full)?,
            mean_test(ds, ModelKind::Linkx, &linkx_grid(), BatchPolicy::Full)?,
        ))
    };
    let strong = two_channel(0.9, Some(0.5))?;
    let (link_s, mlp_s, linkx_s) = run(&strong)?;
    let strong_ok = linkx_s >= link_s.max(mlp_s) - 0.01;

    let partial = two_channel(0.5, Some(1.0))?;
    let (oracle_adj, oracle_feat) = channel_oracles(&partial)?;
    let partial_channels = oracle_adj < 0.9 && oracle_feat < 0.9;
    let (link_p, mlp_p, linkx_p) = run(&partial)?;
    let partial_ok = linkx_p > link_p && linkx_p > mlp_p;
    let pct = |x: f64| format!("{:.2}", 100.0 * x);
    Ok((
        strong_ok && partial_channels && partial_ok,
        format!(
            "both signals: LINKX {} vs LINK {} / MLP {} (>= max - 1); partial channels (oracle LR adjacency {}, features {}): LINKX {} vs LINK {} / MLP {} (> both)",
            pct(linkx_s), pct(link_s), pct(mlp_s), pct(oracle_adj), pct(oracle_feat), pct(linkx_p), pct(link_p), pct(mlp_p)
        ),
    ))
}

/// Forward time of every configuration in each of `rounds` interleaved
/// rounds, so that load drift hits all configurations alike.
fn forward_rounds(configs: &[(Model<f64>, NodeBatch<f64>)], rounds: usize) -> Result<Vec<Vec<f64>>, String> {
    let mut out = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let mut round = Vec::with_capacity(configs.len());
        for (model, batch) in configs {
            let t = Instant::now();
            std::hint::black_box(model.forward(batch).map_err(err)?);
            round.push(t.elapsed().as_secs_f64());
        }
        out.push(round);
    }
    Ok(out)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn complexity() -> Outcome {
    const EXTRA: usize = 3;
    let start = Instant::now();
    let n = 20_000;
    let (d, dim) = (128, 8);
    let mut configs = Vec::new();
    let mut entries = Vec::new();
    for avg_degree in [16.0, 32.0] {
        let mut cfg = TwoChannelConfig::new(n, 4, 5);
        cfg.avg_degree = avg_degree;
        cfg.feature_dim = dim;
        let ds = generate_two_channel(&cfg).map_err(err)?.dataset;
        entries.push(ds.graph.num_entries());
        let nodes: Vec<usize> = (0..n).collect();
        for final_layers in [1, 1 + EXTRA] {
            let arch = Architecture::Linkx {
                num_nodes: n,
                feature_dim: dim,
                hidden: d,
                classes: 4,
                adj_layers: 1,
                feat_layers: 1,
                final_layers,
            };
            let batch = NodeBatch::gather(&arch, &ds.graph, &ds.features, &nodes).map_err(err)?;
            let model = Model::<f64>::new(arch, &mut stream(0, Stream::Init, 0)).map_err(err)?;
            configs.push((model, batch));
        }
    }
    let rounds = forward_rounds(&configs, 9)?;
    let base = |i: usize| rounds.iter().map(|r| r[i]).fold(f64::INFINITY, f64::min);
    let per_layer = |i: usize| median(rounds.iter().map(|r| (r[i + 1] - r[i]) / EXTRA as f64).collect());
    let times = [[base(0)], [base(2)]];
    let ratio = times[1][0] / times[0][0];
    let (extra_small, extra_large) = (per_layer(0), per_layer(2));
    let spread = (extra_small - extra_large).abs() / extra_small.max(extra_large);
    let secs = start.elapsed().as_secs_f64();
    let pass = ratio <= 2.5 && extra_small > 0.0 && extra_large > 0.0 && spread <= 0.25 && secs < 60.0;
    Ok((
        pass,
        format!(
            "|E| {} -> {} ({:.2}x): forward {:.1}ms -> {:.1}ms ({ratio:.2}x <= 2.5x); each extra MLP_f layer +{:.1}ms vs +{:.1}ms (spread {:.0}% <= 25%); {secs:.1}s < 60s",
            entries[0],
            entries[1],
            entries[1] as f64 / entries[0] as f64,
            1e3 * times[0][0],
            1e3 * times[1][0],
            1e3 * extra_small,
            1e3 * extra_large,
            100.0 * spread
        ),
    ))
}

fn cli(args: &[&str], workers: &str) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_linkx")).args(args).env("LINKX_WORKERS", workers).output().map_err(err)?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("linkx {args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn same_files(a: &Path, b: &Path, names: &[&str]) -> Result<bool, String> {
    for name in names {
        if fs::read(a.join(name)).map_err(err)? != fs::read(b.join(name)).map_err(err)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    let root = tmp.path();
    let ds = root.join("ds");
    let s = |p: &Path| p.to_str().expect("utf-8 path").to_string();
    cli(
        &["synth", "--kind", "two_channel", "--n", "300", "--classes", "3", "--adjacency", "monophilous", "--features", "gaussian", "--seed", "11", "--out", &s(&ds)],
        "1",
    )?;
    let grid = root.join("linkx-grid.json");
    fs::write(&grid, r#"[{"model": "linkx", "hidden": 8, "final_layers": 1}, {"model": "linkx", "hidden": 16, "final_layers": 2}]"#).map_err(err)?;
    let mlp_grid = root.join("mlp-grid.json");
    fs::write(&mlp_grid, r#"[{"model": "mlp", "hidden": 16, "layers": 2}, {"model": "mlp", "hidden": 32, "layers": 3}]"#).map_err(err)?;
    let concat_grid = root.join("concat-grid.json");
    fs::write(&concat_grid, r#"[{"model": "concat_mlp", "hidden": 16, "layers": 2}]"#).map_err(err)?;
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("linkx-full", vec!["--model".into(), "linkx".into(), "--grid".into(), s(&grid)]),
        ("linkx-iid", vec!["--model".into(), "linkx".into(), "--batch".into(), "iid".into(), "--grid".into(), s(&grid)]),
        ("mlp", vec!["--model".into(), "mlp".into(), "--grid".into(), s(&mlp_grid)]),
        ("link", vec!["--model".into(), "link".into()]),
        ("concat", vec!["--model".into(), "concat-mlp".into(), "--grid".into(), s(&concat_grid)]),
        ("labelprop", vec!["--model".into(), "labelprop".into(), "--hops".into(), "2".into()]),
        ("sgc", vec!["--model".into(), "sgc".into()]),
    ];
    let mut reproduced = Vec::new();
    let mut pass = true;
    for (name, extra) in &runs {
        let first = root.join(name);
        let mut args = vec!["train".to_string(), s(&ds), "--seed".into(), "21".into(), "--epochs".into(), "40".into(), "--splits".into(), "3".into(), "--out".into(), s(&first)];
        args.extend(extra.iter().cloned());
        cli(&args.iter().map(String::as_str).collect::<Vec<_>>(), "4")?;
        let again = root.join(format!("{name}-again"));
        cli(&["train", "--from-manifest", &s(&first.join("manifest.json")), "--out", &s(&again)], "1")?;
        let same = same_files(&first, &again, &["results.json", "checkpoints/split2/params.bin", "checkpoints/split2/meta.json"])?;
        pass &= same;
        reproduced.push(format!("{name} {}", if same { "identical" } else { "DIFFERENT" }));
    }
    Ok((pass, format!("results.json re-run from manifest (4 vs 1 workers): {}", reproduced.join(", "))))
}

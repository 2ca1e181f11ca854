//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use depdetect::config::RunConfig;
use depdetect::corpus::{self, synth_corpus};
use depdetect::embed::{negsample, train_doc2vec, train_word2vec, infer_doc_vector, W2VConfig, W2VMode};
use depdetect::eval::{metrics, ConfusionMatrix, Metrics, Report, CSV_HEADER, f1_score};
use depdetect::lstm::{lstm_train, encode_sequence, LSTMConfig, LSTMModel};
use depdetect::persist::{load_model, save_model, ModelKind, SavedModel};
use depdetect::pipeline::{self, TrainedPipeline};
use depdetect::profiler::profile_from_labels;
use depdetect::rng;
use depdetect::shallow::{nb_fit, rf_fit, root_split, svm_fit, ForestConfig, SvmConfig};
use depdetect::textprep::{porter_stem, preprocess, Lexicons, PipelineConfig, TokenizedDoc};
use depdetect::vectorize::{SparseVector, VectorMode, VectorizerModel};
use depdetect::Label;

const D: Label = Label::Depressive;
const N: Label = Label::NonDepressive;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < budget, || format!("took {took:.2?}, budget {budget:?}"))?;
    Ok(took)
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_depdetect")
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(bin()).args(args).output().expect("spawn cli")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

// 1

fn oracle_metrics(tp: f64, fp: f64, fn_: f64, tn: f64) -> [f64; 4] {
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    let total = tp + fp + fn_ + tn;
    let accuracy = if total > 0.0 { (tp + tn) / total } else { 0.0 };
    [precision, recall, f1, accuracy]
}

fn metric_formulas() -> Outcome {
    let start = Instant::now();
    let mut r = rng::seeded(1);
    let mut worst = 0.0f64;
    for k in 0..200 {
        let cm = if k < 8 {
            let b = |bit: usize| ((k >> bit) & 1) as u64 * 3;
            ConfusionMatrix { tp: b(0), fp: b(1), fn_: b(2), tn: 0 }
        } else {
            ConfusionMatrix { tp: r.gen_range(0..500), fp: r.gen_range(0..500), fn_: r.gen_range(0..500), tn: r.gen_range(0..500) }
        };
        let m = metrics(&cm);
        let want = oracle_metrics(cm.tp as f64, cm.fp as f64, cm.fn_ as f64, cm.tn as f64);
        for (got, want) in [m.precision, m.recall, m.f1, m.accuracy].iter().zip(want) {
            worst = worst.max((got - want).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    let f1 = f1_score(0.88, 0.60);
    ensure((f1 - 0.71).abs() <= 0.005, || format!("F1(0.88, 0.60) = {f1:.4}"))?;
    let took = within_budget(start, Duration::from_secs(1))?;
    Ok(format!("200 matrices, max dev {worst:.1e}; F1(0.88,0.60)={f1:.4}; {took:.2?}"))
}

// 2

fn synthetic_end_to_end() -> Outcome {
    let start = Instant::now();
    let corpus = synth_corpus(2000, 0.1, 42).map_err(|e| e.to_string())?;
    let runs = [("mnb", "count", 0.95), ("svm", "tfidf", 0.95), ("rf", "count", 0.95), ("lstm", "sequence", 0.90)];
    let mut parts = Vec::new();
    for (model, features, floor) in runs {
        let mut cfg = RunConfig::default();
        cfg.seed = 42;
        cfg.set("model", model).unwrap();
        cfg.set("features", features).unwrap();
        cfg.set("split.ratio", "0.8").unwrap();
        cfg.set("rf.n_estimators", "40").unwrap();
        cfg.set("lstm.hidden", "64").unwrap();
        cfg.set("lstm.epochs", "10").unwrap();
        let out = pipeline::train(&corpus, &cfg, Lexicons::bundled(), false).map_err(|e| e.to_string())?;
        ensure(out.split.test.len() == 400, || format!("test split has {} rows", out.split.test.len()))?;
        let acc = metrics(&out.held_out).accuracy;
        ensure(acc >= floor, || format!("{model}/{features} accuracy {acc:.4} < {floor}"))?;
        parts.push(format!("{model}={acc:.4}"));
    }
    let took = within_budget(start, Duration::from_secs(120))?;
    Ok(format!("{}; {took:.1?}", parts.join(" ")))
}

// 3

/// Relative error; below 1e-6 in magnitude the central difference is
/// dominated by roundoff (about 1e-11 absolute), so the denominator is
/// floored there.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

const EPS: f64 = 1e-5;

fn lstm_grad_check(seed: u64) -> Result<f64, String> {
    let cfg = LSTMConfig { hidden: 8, embed_dim: 8, max_len: 5, epochs: 1, batch: 1, lr: 0.1, dropout_in: 0.0, dropout_rec: 0.0, seed };
    let mut model = LSTMModel::new(20, &cfg).map_err(|e| e.to_string())?;
    let mut r = rng::seeded(seed ^ 0x5eed);
    for v in model.embed.iter_mut().skip(8).chain(&mut model.w).chain(&mut model.u).chain(&mut model.b).chain(&mut model.w_out) {
        *v = r.gen_range(-0.6..0.6);
    }
    model.b_out = r.gen_range(-0.5..0.5);
    let pad = (seed % 3) as usize;
    let ids: Vec<usize> = (0..5).map(|k| if k < pad { 0 } else { r.gen_range(1..=20) }).collect();
    let y = if seed.is_multiple_of(2) { D } else { N };
    let (_, grads) = model.loss_and_grad(&ids, y, None).map_err(|e| e.to_string())?;
    let loss = |m: &LSTMModel| m.loss_and_grad(&ids, y, None).unwrap().0;

    let mut worst = 0.0f64;
    let mut check = |analytic: f64, numeric: f64| worst = worst.max(rel_err(analytic, numeric));
    macro_rules! group {
        ($field:ident, $analytic:expr) => {
            for k in 0..model.$field.len() {
                let mut plus = model.clone();
                plus.$field[k] += EPS;
                let mut minus = model.clone();
                minus.$field[k] -= EPS;
                check($analytic(k), (loss(&plus) - loss(&minus)) / (2.0 * EPS));
            }
        };
    }
    let d = cfg.embed_dim;
    group!(embed, |k: usize| grads.embed.get(&(k / d)).map_or(0.0, |row| row[k % d]));
    group!(w, |k: usize| grads.w[k]);
    group!(u, |k: usize| grads.u[k]);
    group!(b, |k: usize| grads.b[k]);
    group!(w_out, |k: usize| grads.w_out[k]);
    let mut plus = model.clone();
    plus.b_out += EPS;
    let mut minus = model.clone();
    minus.b_out -= EPS;
    check(grads.b_out, (loss(&plus) - loss(&minus)) / (2.0 * EPS));
    Ok(worst)
}

fn as_refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
    v.iter().map(Vec::as_slice).collect()
}

fn negsample_grad_check(seed: u64, n_inputs: usize) -> f64 {
    let dim = 8;
    let mut r = rng::seeded(seed);
    let mut vec = || (0..dim).map(|_| r.gen_range(-0.8..0.8)).collect::<Vec<f64>>();
    let inputs: Vec<Vec<f64>> = (0..n_inputs).map(|_| vec()).collect();
    let positive = vec();
    let negatives: Vec<Vec<f64>> = (0..5).map(|_| vec()).collect();
    let loss = |i: &[Vec<f64>], p: &[f64], n: &[Vec<f64>]| negsample::loss(&as_refs(i), p, &as_refs(n));
    let g = negsample::gradient(&as_refs(&inputs), &positive, &as_refs(&negatives));

    let mut worst = rel_err(g.loss, loss(&inputs, &positive, &negatives));
    let central = |f: &dyn Fn(f64) -> f64| (f(EPS) - f(-EPS)) / (2.0 * EPS);
    for row in 0..n_inputs {
        for j in 0..dim {
            let num = central(&|e| {
                let mut v = inputs.clone();
                v[row][j] += e;
                loss(&v, &positive, &negatives)
            });
            worst = worst.max(rel_err(g.inputs[j], num));
        }
    }
    for j in 0..dim {
        let num = central(&|e| {
            let mut v = positive.clone();
            v[j] += e;
            loss(&inputs, &v, &negatives)
        });
        worst = worst.max(rel_err(g.positive[j], num));
    }
    for (n, gn) in g.negatives.iter().enumerate() {
        for j in 0..dim {
            let num = central(&|e| {
                let mut v = negatives.clone();
                v[n][j] += e;
                loss(&inputs, &positive, &v)
            });
            worst = worst.max(rel_err(gn[j], num));
        }
    }
    worst
}

fn gradient_checks() -> Outcome {
    let start = Instant::now();
    let (mut lstm, mut sg, mut cbow, mut dm) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for seed in 0..10 {
        lstm = lstm.max(lstm_grad_check(seed)?);
        // Skip-gram predicts from one word, CBOW from the window mean, PV-DM
        // adds the document and tag vectors to the window.
        sg = sg.max(negsample_grad_check(100 + seed, 1));
        cbow = cbow.max(negsample_grad_check(200 + seed, 4));
        dm = dm.max(negsample_grad_check(300 + seed, 6));
    }
    let worst = lstm.max(sg).max(cbow).max(dm);
    ensure(worst < 1e-4, || format!("max rel err lstm={lstm:.1e} skipgram={sg:.1e} cbow={cbow:.1e} pv-dm={dm:.1e}"))?;
    let took = within_budget(start, Duration::from_secs(30))?;
    Ok(format!("10 seeds, max rel err lstm={lstm:.1e} skipgram={sg:.1e} cbow={cbow:.1e} pv-dm={dm:.1e}; {took:.2?}"))
}

// 4

/// Posterior from raw counts and direct products, no logs.
fn bayes_by_hand(docs: &[Vec<u32>], y: &[Label], alpha: f64, v: usize, query: &[u32]) -> [f64; 2] {
    let mut joint = [0.0; 2];
    for (c, label) in [N, D].into_iter().enumerate() {
        let members: Vec<&Vec<u32>> = docs.iter().zip(y).filter(|(_, l)| **l == label).map(|(d, _)| d).collect();
        let prior = members.len() as f64 / docs.len() as f64;
        let total: f64 = members.iter().flat_map(|d| d.iter()).map(|&x| x as f64).sum();
        let mut p = prior;
        for t in 0..v {
            let count: f64 = members.iter().map(|d| d[t] as f64).sum();
            p *= ((count + alpha) / (total + alpha * v as f64)).powi(query[t] as i32);
        }
        joint[c] = p;
    }
    let z = joint[0] + joint[1];
    [joint[0] / z, joint[1] / z]
}

fn sparse(counts: &[u32]) -> SparseVector {
    SparseVector::from_pairs(counts.iter().enumerate().map(|(i, &c)| (i, c as f64)))
}

fn nb_matches(docs: &[Vec<u32>], y: &[Label], alpha: f64, v: usize) -> Result<f64, String> {
    let x: Vec<SparseVector> = docs.iter().map(|d| sparse(d)).collect();
    let model = nb_fit(&x, y, alpha, v).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for mask in 0..(1u32 << v) {
        let q: Vec<u32> = (0..v).map(|t| (mask >> t) & 1).collect();
        let want = bayes_by_hand(docs, y, alpha, v, &q);
        let got = model.posteriors(&sparse(&q));
        worst = worst.max((got[0] - want[0]).abs()).max((got[1] - want[1]).abs());
        let (label, _) = model.nb_predict(&sparse(&q));
        if (want[1] - want[0]).abs() > 1e-9 {
            let expect = if want[1] > want[0] { D } else { N };
            ensure(label == expect, || format!("argmax mismatch on {q:?}"))?;
        }
    }
    for d in docs {
        let want = bayes_by_hand(docs, y, alpha, v, d);
        let got = model.posteriors(&sparse(d));
        worst = worst.max((got[1] - want[1]).abs());
    }
    Ok(worst)
}

fn exhaustive_gini(x: &[Vec<f64>], y: &[Label]) -> Option<(usize, f64, f64)> {
    let gini = |rows: &[usize]| {
        if rows.is_empty() {
            return 0.0;
        }
        let d = rows.iter().filter(|&&r| y[r] == D).count() as f64 / rows.len() as f64;
        1.0 - d * d - (1.0 - d) * (1.0 - d)
    };
    let n = x.len() as f64;
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..x[0].len() {
        let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = (0..x.len()).partition(|&i| x[i][f] <= t);
            let imp = (l.len() as f64 * gini(&l) + r.len() as f64 * gini(&r)) / n;
            if best.is_none_or(|(_, _, b)| imp < b - 1e-12) {
                best = Some((f, t, imp));
            }
        }
    }
    best
}

fn tfidf_by_hand(docs: &[Vec<String>], query: &[String], term: &str) -> f64 {
    let n = docs.len() as f64;
    let weight = |t: &str| {
        let tf = query.iter().filter(|q| *q == t).count() as f64;
        let df = docs.iter().filter(|d| d.iter().any(|w| w == t)).count() as f64;
        if df == 0.0 {
            return 0.0;
        }
        tf * (((1.0 + n) / (1.0 + df)).ln() + 1.0)
    };
    let mut terms: Vec<&String> = query.iter().collect();
    terms.sort();
    terms.dedup();
    let norm = terms.iter().map(|t| weight(t).powi(2)).sum::<f64>().sqrt();
    if norm == 0.0 {
        0.0
    } else {
        weight(term) / norm
    }
}

fn brute_force_oracles() -> Outcome {
    let mut r = rng::seeded(4);

    // Every corpus of two or three docs over two terms with 0/1 counts.
    let mut exhaustive = 0usize;
    let mut nb_worst = 0.0f64;
    for n_docs in 2..=3usize {
        let n_vectors = 1usize << (2 * n_docs);
        for cells in 0..n_vectors {
            for labels in 0..(1usize << n_docs) {
                let y: Vec<Label> = (0..n_docs).map(|i| if (labels >> i) & 1 == 1 { D } else { N }).collect();
                if y.iter().all(|&l| l == y[0]) {
                    continue;
                }
                let docs: Vec<Vec<u32>> = (0..n_docs).map(|i| vec![((cells >> (2 * i)) & 1) as u32, ((cells >> (2 * i + 1)) & 1) as u32]).collect();
                nb_worst = nb_worst.max(nb_matches(&docs, &y, 1.0, 2)?);
                exhaustive += 1;
            }
        }
    }
    for _ in 0..400 {
        let n_docs = r.gen_range(2..=6);
        let v = r.gen_range(1..=8);
        let mut y: Vec<Label> = (0..n_docs).map(|_| if r.gen_bool(0.5) { D } else { N }).collect();
        y[0] = D;
        y[1] = N;
        let docs: Vec<Vec<u32>> = (0..n_docs).map(|_| (0..v).map(|_| r.gen_range(0..4)).collect()).collect();
        let alpha = [1.0, 0.5, 0.1][r.gen_range(0..3)];
        nb_worst = nb_worst.max(nb_matches(&docs, &y, alpha, v)?);
    }
    ensure(nb_worst <= 1e-12, || format!("naive Bayes deviates by {nb_worst:e}"))?;

    for case in 0..300 {
        let n = r.gen_range(2..=20);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| r.gen_range(0..5) as f64).collect()).collect();
        let y: Vec<Label> = (0..n).map(|_| if r.gen_bool(0.5) { D } else { N }).collect();
        let rows: Vec<SparseVector> = x.iter().map(|row| SparseVector::from_dense(row)).collect();
        let got = root_split(&rows, &y, 4);
        let want = exhaustive_gini(&x, &y);
        match (got, want) {
            (None, None) => {}
            (Some(g), Some((f, t, imp))) => ensure(g.feature == f && g.threshold == t && (g.impurity - imp).abs() <= 1e-12, || {
                format!("case {case}: got ({}, {}, {}) want ({f}, {t}, {imp})", g.feature, g.threshold, g.impurity)
            })?,
            (g, w) => return Err(format!("case {case}: got {g:?}, want {w:?}")),
        }
    }

    let alphabet = ["sad", "tired", "alone", "happy", "sun", "game", "cry", "fine", "ok"];
    let mut tfidf_worst = 0.0f64;
    for _ in 0..100 {
        let n_docs = r.gen_range(1..=6);
        let docs: Vec<Vec<String>> = (0..n_docs)
            .map(|_| (0..r.gen_range(1..=7)).map(|_| alphabet[r.gen_range(0..alphabet.len())].to_string()).collect())
            .collect();
        let model = VectorizerModel::fit(&docs, VectorMode::Tfidf, 1, None).map_err(|e| e.to_string())?;
        let mut queries = docs.clone();
        queries.push((0..5).map(|_| alphabet[r.gen_range(0..alphabet.len())].to_string()).collect());
        for q in &queries {
            let vec = model.transform(q);
            for (i, term) in model.vocab.terms().iter().enumerate() {
                tfidf_worst = tfidf_worst.max((vec.get(i) - tfidf_by_hand(&docs, q, term)).abs());
            }
        }
    }
    ensure(tfidf_worst <= 1e-12, || format!("tf-idf deviates by {tfidf_worst:e}"))?;
    Ok(format!(
        "nb {exhaustive} exhaustive + 400 random corpora dev {nb_worst:.1e}; 300 root splits exact; tf-idf 100 corpora dev {tfidf_worst:.1e}"
    ))
}

// 5

const PORTER_PAIRS: &[(&str, &str)] = &[
    ("caresses", "caress"),
    ("ponies", "poni"),
    ("ties", "ti"),
    ("caress", "caress"),
    ("cats", "cat"),
    ("feed", "feed"),
    ("agreed", "agre"),
    ("plastered", "plaster"),
    ("bled", "bled"),
    ("motoring", "motor"),
    ("sing", "sing"),
    ("conflated", "conflat"),
    ("troubled", "troubl"),
    ("sized", "size"),
    ("hopping", "hop"),
    ("tanned", "tan"),
    ("falling", "fall"),
    ("hissing", "hiss"),
    ("fizzed", "fizz"),
    ("failing", "fail"),
    ("filing", "file"),
    ("coding", "code"),
    ("happy", "happi"),
    ("sky", "sky"),
    ("relational", "relat"),
    ("conditional", "condit"),
    ("rational", "ration"),
    ("valenci", "valenc"),
    ("hesitanci", "hesit"),
    ("digitizer", "digit"),
    ("conformabli", "conform"),
    ("radicalli", "radic"),
    ("differentli", "differ"),
    ("vileli", "vile"),
    ("analogousli", "analog"),
    ("vietnamization", "vietnam"),
    ("predication", "predic"),
    ("operator", "oper"),
    ("feudalism", "feudal"),
    ("decisiveness", "decis"),
    ("hopefulness", "hope"),
    ("callousness", "callous"),
    ("formaliti", "formal"),
    ("sensitiviti", "sensit"),
    ("sensibiliti", "sensibl"),
    ("triplicate", "triplic"),
    ("formative", "form"),
    ("formalize", "formal"),
    ("electriciti", "electr"),
    ("electrical", "electr"),
    ("hopeful", "hope"),
    ("goodness", "good"),
    ("revival", "reviv"),
    ("allowance", "allow"),
    ("inference", "infer"),
    ("airliner", "airlin"),
    ("gyroscopic", "gyroscop"),
    ("adjustable", "adjust"),
    ("defensible", "defens"),
    ("irritant", "irrit"),
    ("replacement", "replac"),
    ("adjustment", "adjust"),
    ("dependent", "depend"),
    ("adoption", "adopt"),
    ("homologous", "homolog"),
    ("communism", "commun"),
    ("activate", "activ"),
    ("angulariti", "angular"),
    ("effective", "effect"),
    ("bowdlerize", "bowdler"),
    ("probate", "probat"),
    ("rate", "rate"),
    ("cease", "ceas"),
    ("controll", "control"),
    ("roll", "roll"),
    ("generalizations", "gener"),
    ("oscillators", "oscil"),
];

fn porter_fixture() -> Outcome {
    let wrong: Vec<String> = PORTER_PAIRS
        .iter()
        .filter_map(|(w, want)| {
            let got = porter_stem(w);
            (got != *want).then(|| format!("{w}->{got} (want {want})"))
        })
        .collect();
    ensure(PORTER_PAIRS.len() >= 50, || "fixture too small".into())?;
    ensure(wrong.is_empty(), || wrong.join(", "))?;
    Ok(format!("{} pairs exact", PORTER_PAIRS.len()))
}

// 6

const SMALL: &[&str] = &[
    "--set", "w2v.dim=16",
    "--set", "w2v.epochs=3",
    "--set", "rf.n_estimators=10",
    "--set", "lstm.hidden=16",
    "--set", "lstm.embed_dim=16",
    "--set", "lstm.epochs=2",
    "--set", "d2v.infer_steps=5",
];

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("synth.csv");
    let out = cli(&["synth", "--n", "300", "--seed", "5", "--out", p(&data)]);
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let pairs = [("mnb", "count"), ("mnb", "binary"), ("svm", "tfidf"), ("svm", "w2v"), ("rf", "count"), ("rf", "d2v"), ("lstm", "sequence")];
    for (model, features) in pairs {
        let mut artifacts = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("{model}-{features}-{run}.ddm"));
            let mut args = vec!["train", p(&data), "--model", model, "--features", features, "--seed", "11", "--out", p(&path)];
            args.extend_from_slice(SMALL);
            let out = cli(&args);
            ensure(out.status.success(), || format!("{model}/{features}: {}", String::from_utf8_lossy(&out.stderr)))?;
            artifacts.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        ensure(artifacts[0] == artifacts[1], || format!("{model}/{features}: artifacts differ"))?;
    }
    Ok(format!("{} train commands byte-identical across two runs", pairs.len()))
}

// 7

fn round_trip(m: &SavedModel) -> Result<SavedModel, String> {
    let mut bytes = Vec::new();
    save_model(m, &mut bytes).map_err(|e| e.to_string())?;
    let back = load_model(&bytes[..]).map_err(|e| e.to_string())?;
    let mut again = Vec::new();
    save_model(&back, &mut again).map_err(|e| e.to_string())?;
    ensure(again == bytes, || format!("{:?}: re-serialized bytes differ", m.kind()))?;
    ensure(&back == m, || format!("{:?}: loaded model differs", m.kind()))?;
    Ok(back)
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn persistence() -> Outcome {
    let corpus = synth_corpus(200, 0.1, 9).map_err(|e| e.to_string())?;
    let lex = Lexicons::bundled();
    let prep = PipelineConfig::default();
    let docs: Vec<Vec<String>> = corpus.texts().iter().map(|t| preprocess(t, &prep, &lex)).collect();
    let y = corpus.labels();
    let mut kinds = Vec::new();

    let counts = VectorizerModel::fit(&docs, VectorMode::Count, 1, None).map_err(|e| e.to_string())?;
    let tfidf = VectorizerModel::fit(&docs, VectorMode::Tfidf, 1, None).map_err(|e| e.to_string())?;
    for vz in [&counts, &tfidf] {
        let SavedModel::Vectorizer(back) = round_trip(&SavedModel::Vectorizer(vz.clone()))? else { unreachable!() };
        for d in &docs {
            let (a, b) = (vz.transform(d), back.transform(d));
            ensure(a.iter().zip(b.iter()).all(|(x, y)| x.0 == y.0 && x.1.to_bits() == y.1.to_bits()) && a.nnz() == b.nnz(), || {
                "vectorizer output differs".into()
            })?;
        }
    }
    kinds.push(ModelKind::Vectorizer);

    let v = counts.dim();
    let xc: Vec<SparseVector> = docs.iter().map(|d| counts.transform(d)).collect();
    let xt: Vec<SparseVector> = docs.iter().map(|d| tfidf.transform(d)).collect();

    let mnb = nb_fit(&xc, &y, 1.0, v).map_err(|e| e.to_string())?;
    let SavedModel::Mnb(back) = round_trip(&SavedModel::Mnb(mnb.clone()))? else { unreachable!() };
    ensure(xc.iter().all(|x| same_bits(&mnb.joint_log(x), &back.joint_log(x))), || "mnb scores differ".into())?;
    kinds.push(ModelKind::Mnb);

    let svm = svm_fit(&xt, &y, v, &SvmConfig { seed: 3, ..SvmConfig::default() }).map_err(|e| e.to_string())?;
    let SavedModel::Svm(back) = round_trip(&SavedModel::Svm(svm.clone()))? else { unreachable!() };
    ensure(xt.iter().all(|x| svm.decision(x).to_bits() == back.decision(x).to_bits()), || "svm decisions differ".into())?;
    kinds.push(ModelKind::Svm);

    let rf = rf_fit(&xc, &y, v, &ForestConfig { n_estimators: 8, weighted: true, seed: 3, ..ForestConfig::default() }).map_err(|e| e.to_string())?;
    let SavedModel::Rf(back) = round_trip(&SavedModel::Rf(rf.clone()))? else { unreachable!() };
    ensure(xc.iter().all(|x| rf.vote_fraction(x).to_bits() == back.vote_fraction(x).to_bits()), || "rf votes differ".into())?;
    kinds.push(ModelKind::Rf);

    let lcfg = LSTMConfig { hidden: 8, embed_dim: 8, max_len: 12, epochs: 2, seed: 3, ..LSTMConfig::default() };
    let seqs: Vec<(Vec<usize>, Label)> = docs.iter().zip(&y).map(|(d, &l)| (encode_sequence(d, &counts.vocab, lcfg.max_len), l)).collect();
    let lstm = LSTMModel::new(v, &lcfg).map_err(|e| e.to_string())?;
    let (lstm, _) = lstm_train(lstm, &seqs).map_err(|e| e.to_string())?;
    let SavedModel::Lstm(back) = round_trip(&SavedModel::Lstm(lstm.clone()))? else { unreachable!() };
    for (ids, _) in &seqs {
        let (a, b) = (lstm.forward(ids).map_err(|e| e.to_string())?, back.forward(ids).map_err(|e| e.to_string())?);
        ensure(a.to_bits() == b.to_bits(), || "lstm outputs differ".into())?;
    }
    kinds.push(ModelKind::Lstm);

    let wcfg = W2VConfig { mode: W2VMode::Skipgram, dim: 10, epochs: 2, seed: 3, ..W2VConfig::default() };
    let (w2v, _) = train_word2vec(&docs, &counts.vocab, &wcfg).map_err(|e| e.to_string())?;
    let SavedModel::W2v(back) = round_trip(&SavedModel::W2v(w2v.clone()))? else { unreachable!() };
    ensure(same_bits(&w2v.input, &back.input) && same_bits(&w2v.output, &back.output), || "w2v matrices differ".into())?;
    kinds.push(ModelKind::W2v);

    let tagged: Vec<TokenizedDoc> = corpus.items().iter().zip(&docs).map(|(t, d)| TokenizedDoc::new(t.id.clone(), d.clone())).collect();
    let tags: BTreeMap<String, String> = corpus.items().iter().map(|t| (t.id.clone(), t.label.as_str().to_string())).collect();
    let usable: Vec<TokenizedDoc> = tagged.into_iter().filter(|d| d.tokens.iter().any(|t| counts.vocab.get(t).is_some())).collect();
    let (d2v, _) = train_doc2vec(&usable, &tags, &counts.vocab, &W2VConfig { dim: 10, epochs: 2, seed: 3, ..W2VConfig::default() })
        .map_err(|e| e.to_string())?;
    let SavedModel::D2v(back) = round_trip(&SavedModel::D2v(d2v.clone()))? else { unreachable!() };
    for d in usable.iter().take(30) {
        let a = infer_doc_vector(&d.tokens, &d2v, 5, 1).map_err(|e| e.to_string())?;
        let b = infer_doc_vector(&d.tokens, &back, 5, 1).map_err(|e| e.to_string())?;
        ensure(same_bits(&a, &b), || "d2v inference differs".into())?;
    }
    kinds.push(ModelKind::D2v);

    kinds.sort();
    let mut all = ModelKind::ALL.to_vec();
    all.sort();
    ensure(kinds == all, || format!("covered {kinds:?}"))?;
    Ok(format!("{} kinds, 0 ULP", kinds.len()))
}

// 8

fn train_mnb_model(dir: &Path) -> Result<(std::path::PathBuf, TrainedPipeline), String> {
    let data = dir.join("train.csv");
    corpus::write_csv(&synth_corpus(400, 0.1, 21).map_err(|e| e.to_string())?, std::fs::File::create(&data).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let model = dir.join("mnb.ddm");
    let out = cli(&["train", p(&data), "--model", "mnb", "--out", p(&model)]);
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let pipe = TrainedPipeline::load_file(&model).map_err(|e| e.to_string())?;
    Ok((model, pipe))
}

fn write_user(path: &Path, tweets: &[String]) {
    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(["id", "text"]).unwrap();
    for (i, t) in tweets.iter().enumerate() {
        w.write_record([format!("t{i}"), t.clone()]).unwrap();
    }
    w.flush().unwrap();
}

fn profiler_contract() -> Outcome {
    let mut r = rng::seeded(8);
    for case in 0..1000 {
        let n = r.gen_range(1..=60usize);
        let d = r.gen_range(0..=n);
        // A third of the thresholds sit exactly on an attainable fraction.
        let threshold = if case % 3 == 0 && d > 0 && d < n { d as f64 / n as f64 } else { r.gen_range(0.001..0.999) };
        let mut labels: Vec<Label> = (0..n).map(|i| if i < d { D } else { N }).collect();
        labels.reverse();
        let res = profile_from_labels("u", &labels, threshold).map_err(|e| e.to_string())?;
        let fraction = d as f64 / n as f64;
        ensure(res.fraction == fraction && res.flagged == (fraction > threshold) && res.n_depressive == d, || {
            format!("case {case}: n={n} d={d} t={threshold} -> {res:?}")
        })?;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (model, pipe) = train_mnb_model(dir.path())?;
    let pool = |words: &[&str], k: usize| -> Vec<String> {
        (0..10).map(|i| (0..6).map(|j| words[(i * 7 + j * k) % words.len()]).collect::<Vec<_>>().join(" ")).collect()
    };
    let sad = pool(&corpus::DEPRESSIVE_POOL, 3);
    let happy = pool(&corpus::NON_DEPRESSIVE_POOL, 5);
    let count = |tweets: &[String]| tweets.iter().filter(|t| pipe.predict_text(t).label == D).count();
    let (n_sad, n_happy) = (count(&sad), count(&happy));
    ensure(n_sad == 10 && n_happy == 0, || format!("pool predictions {n_sad}/10 and {n_happy}/10"))?;

    let sad_path = dir.path().join("sad.csv");
    let happy_path = dir.path().join("happy.csv");
    let mixed_path = dir.path().join("mixed.csv");
    write_user(&sad_path, &sad);
    write_user(&happy_path, &happy);
    let mut mixed: Vec<String> = sad[..8].to_vec();
    mixed.extend_from_slice(&happy[..2]);
    write_user(&mixed_path, &mixed);

    let code = |args: &[&str]| cli(args).status.code();
    let checks = [
        (code(&["profile", "--model", p(&model), p(&sad_path)]), Some(2)),
        (code(&["profile", "--model", p(&model), p(&happy_path)]), Some(0)),
        (code(&["profile", "--model", p(&model), p(&mixed_path), "--threshold", "0.8"]), Some(0)),
        (code(&["profile", "--model", p(&model), p(&mixed_path), "--threshold", "0.75"]), Some(2)),
        (code(&["profile", "--model", p(&model), p(&mixed_path), "--threshold", "1.5"]), Some(1)),
        (code(&["profile", "--model", p(&dir.path().join("missing.ddm")), p(&sad_path)]), Some(1)),
        (code(&["profile", "--model", p(&model), p(&dir.path().join("missing.csv"))]), Some(1)),
        (code(&["train", p(&sad_path)]), Some(1)),
        (code(&["no-such-command"]), Some(1)),
    ];
    for (i, (got, want)) in checks.iter().enumerate() {
        ensure(got == want, || format!("exit-code check {i}: got {got:?}, want {want:?}"))?;
    }
    Ok(format!("1000 fuzz cases exact; {} exit-code checks", checks.len()))
}

// 9

fn report_format() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let full = synth_corpus(400, 0.1, 13).map_err(|e| e.to_string())?;
    let split = corpus::split_train_test(&full, 0.8, 13).map_err(|e| e.to_string())?;
    let test_path = dir.path().join("test.csv");
    corpus::write_csv(&split.test, std::fs::File::create(&test_path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;

    let order = ["svm", "rf", "mnb", "lstm"];
    let mut paths = Vec::new();
    let mut expected = Report::default();
    for m in order {
        let mut cfg = RunConfig::default();
        cfg.set("model", m).unwrap();
        for pair in SMALL.chunks(2) {
            cfg.apply_override(pair[1]).unwrap();
        }
        let (pipe, _) = pipeline::fit(&split.train, &cfg, Lexicons::bundled(), false).map_err(|e| e.to_string())?;
        let path = dir.path().join(format!("{m}.ddm"));
        pipe.save_file(&path).map_err(|e| e.to_string())?;
        let ev = pipe.evaluate(&split.test).map_err(|e| e.to_string())?;
        expected.push(pipe.kind().display_name(), ev.metrics).map_err(|e| e.to_string())?;
        paths.push(path);
    }
    let csv_path = dir.path().join("report.csv");
    let mut args = vec!["evaluate".to_string(), p(&test_path).to_string(), "--out".into(), p(&csv_path).to_string()];
    for path in &paths {
        args.push("--model".into());
        args.push(p(path).to_string());
    }
    let out = Command::new(bin()).args(&args).output().map_err(|e| e.to_string())?;
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    let table: Vec<&str> = stdout.lines().take(5).collect();
    let header: Vec<&str> = table[0].split("  ").map(str::trim).filter(|s| !s.is_empty()).collect();
    ensure(header == ["Classifier", "Precision", "Recall", "F1 Score", "Accuracy"], || format!("header {header:?}"))?;
    let names = ["SVM", "Random Forest", "Multinomial NB", "LSTM"];
    for (line, name) in table[1..].iter().zip(names) {
        ensure(line.starts_with(name), || format!("row {line:?} should start with {name}"))?;
        let cells: Vec<&str> = line[name.len()..].split_whitespace().collect();
        ensure(cells.len() == 4, || format!("row {line:?}"))?;
        for c in &cells[..3] {
            ensure(c.len() == 4 && c.as_bytes()[1] == b'.' && c.parse::<f64>().is_ok(), || format!("cell {c:?} in {line:?}"))?;
        }
        let acc = cells[3];
        let digits = acc.trim_end_matches('%');
        ensure(acc.ends_with('%') && digits.split('.').nth(1).map(str::len) == Some(2) && digits.parse::<f64>().is_ok(), || format!("accuracy {acc:?}"))?;
    }
    let csv = std::fs::read_to_string(&csv_path).map_err(|e| e.to_string())?;
    let want_csv = expected.to_csv().map_err(|e| e.to_string())?;
    ensure(csv == want_csv, || format!("csv {csv:?} != {want_csv:?}"))?;
    ensure(csv.lines().next() == Some(CSV_HEADER) && csv.lines().count() == 5, || "csv shape".into())?;
    let want_table = expected.to_table().map_err(|e| e.to_string())?;
    ensure(stdout.starts_with(&want_table), || "table differs from library rendering".into())?;
    let sample = Metrics { precision: 0.88, recall: 0.6, f1: f1_score(0.88, 0.6), accuracy: 0.7 };
    let mut one = Report::default();
    one.push("LSTM", sample).unwrap();
    ensure(one.to_csv().unwrap() == format!("{CSV_HEADER}\nLSTM,0.88,0.60,0.71,70.00%\n"), || "reference row formatting".into())?;
    Ok("4 rows in given order, header and number formats exact".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("metric formulas", metric_formulas),
        ("synthetic end-to-end", synthetic_end_to_end),
        ("gradient checks", gradient_checks),
        ("brute-force oracles", brute_force_oracles),
        ("porter stemmer", porter_fixture),
        ("determinism", determinism),
        ("persistence", persistence),
        ("profiler", profiler_contract),
        ("report format", report_format),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match result {
            Ok(detail) => println!("acceptance {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("acceptance {} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

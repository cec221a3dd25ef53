use std::fmt::Write;

use super::{ClassifierConfig, ClassifierError, ClassifierModel, EncoderKind, FeatureVocab, Vocab};
use crate::linalg::{read_matrix, write_matrix};
use crate::scalar::Scalar;
use crate::schema::TypePath;

const MAGIC: &str = "ontopop-classifier 1";

fn ferr(line: usize, msg: impl Into<String>) -> ClassifierError {
    ClassifierError::Format { line, msg: msg.into() }
}

/// Plain-text checkpoint: header, label list, vocabularies, then every tensor.
pub fn write_checkpoint<S: Scalar>(model: &ClassifierModel<S>) -> String {
    let c = &model.config;
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "encoder {}", c.encoder.as_str());
    let _ = writeln!(out, "word_dim {}", c.word_dim);
    let _ = writeln!(out, "feature_dim {}", c.feature_dim);
    let _ = writeln!(out, "repr_dim {}", c.repr_dim);
    let _ = writeln!(out, "hidden {}", c.hidden);
    let _ = writeln!(out, "window {}", c.window);
    let _ = writeln!(out, "use_features {}", c.use_features);
    let _ = writeln!(out, "learning_rate {}", c.learning_rate);
    let _ = writeln!(out, "batch_size {}", c.batch_size);
    let _ = writeln!(out, "epochs {}", c.epochs);
    let _ = writeln!(out, "init_scale {}", c.init_scale);
    let _ = writeln!(out, "labels {}", model.labels.len());
    for l in &model.labels {
        let _ = writeln!(out, "{l}");
    }
    let _ = writeln!(out, "vocab {}", model.vocab.len());
    for w in model.vocab.tokens() {
        let _ = writeln!(out, "{w}");
    }
    let _ = writeln!(out, "features {}", model.features.len());
    for t in model.features.tags() {
        let _ = writeln!(out, "{t}");
    }
    for (name, m) in model.params.named_tensors() {
        write_matrix(&mut out, &name, m);
    }
    out
}

pub fn read_checkpoint<S: Scalar>(text: &str) -> Result<ClassifierModel<S>, ClassifierError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        _ => return Err(ferr(1, "not a classifier checkpoint")),
    }
    let mut next_kv = |key: &str| -> Result<(usize, String), ClassifierError> {
        let (i, l) = lines.next().ok_or_else(|| ferr(0, format!("missing `{key}`")))?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok((i + 1, v.trim().to_string())),
            _ => Err(ferr(i + 1, format!("expected `{key}`"))),
        }
    };
    fn num<T: std::str::FromStr>((line, v): (usize, String)) -> Result<T, ClassifierError> {
        v.parse().map_err(|_| ferr(line, format!("bad value `{v}`")))
    }
    let (line, enc) = next_kv("encoder")?;
    let encoder = EncoderKind::parse(&enc).ok_or_else(|| ferr(line, format!("unknown encoder `{enc}`")))?;
    let config = ClassifierConfig {
        encoder,
        word_dim: num(next_kv("word_dim")?)?,
        feature_dim: num(next_kv("feature_dim")?)?,
        repr_dim: num(next_kv("repr_dim")?)?,
        hidden: num(next_kv("hidden")?)?,
        window: num(next_kv("window")?)?,
        use_features: num(next_kv("use_features")?)?,
        learning_rate: num(next_kv("learning_rate")?)?,
        batch_size: num(next_kv("batch_size")?)?,
        epochs: num(next_kv("epochs")?)?,
        init_scale: num(next_kv("init_scale")?)?,
    };
    config.validate()?;
    let n: usize = num(next_kv("labels")?)?;
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let (i, l) = lines.next().ok_or_else(|| ferr(0, "truncated label list"))?;
        labels.push(l.parse::<TypePath>().map_err(|e| ferr(i + 1, e.to_string()))?);
    }
    let list = |key: &str, lines: &mut std::iter::Enumerate<std::str::Lines>| -> Result<Vec<String>, ClassifierError> {
        let (i, l) = lines.next().ok_or_else(|| ferr(0, format!("missing `{key}`")))?;
        let n: usize = match l.split_once(' ') {
            Some((k, v)) if k == key => v.trim().parse().map_err(|_| ferr(i + 1, "bad count"))?,
            _ => return Err(ferr(i + 1, format!("expected `{key}`"))),
        };
        (0..n)
            .map(|_| lines.next().map(|(_, l)| l.to_string()).ok_or_else(|| ferr(0, format!("truncated {key} list"))))
            .collect()
    };
    let vocab = Vocab::from_list(list("vocab", &mut lines)?);
    let features = FeatureVocab::from_list(list("features", &mut lines)?);
    let mut model = ClassifierModel::with_vocab(vocab, features, labels, &config, 0);
    let names: Vec<String> = model.params.named_tensors().into_iter().map(|(n, _)| n).collect();
    for (name, slot) in names.iter().zip(model.params.tensors_mut()) {
        let m = read_matrix::<S>(&mut lines, name).map_err(|e| ferr(0, e))?;
        if m.shape() != slot.shape() {
            return Err(ferr(0, format!("tensor `{name}` has shape {:?}, expected {:?}", m.shape(), slot.shape())));
        }
        *slot = m;
    }
    Ok(model)
}

/// Copies pretrained vectors (`word v1 v2 ...` per line) into the word table
/// for words already in the vocabulary. Returns the number of rows replaced.
pub fn load_embeddings_text<S: Scalar>(model: &mut ClassifierModel<S>, text: &str) -> Result<usize, ClassifierError> {
    let dim = model.config.word_dim;
    let mut replaced = 0;
    for (i, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let values: Vec<f64> = parts
            .map(|p| p.parse().map_err(|_| ferr(i + 1, format!("bad number `{p}`"))))
            .collect::<Result<_, _>>()?;
        if values.len() != dim {
            return Err(ClassifierError::DimensionMismatch {
                expected: dim,
                found: values.len(),
            });
        }
        let idx = model.vocab.get(word);
        if idx == model.vocab.unk_index() {
            continue;
        }
        for (dst, v) in model.params.word_emb.row_mut(idx).iter_mut().zip(values) {
            *dst = S::lit(v);
        }
        replaced += 1;
    }
    Ok(replaced)
}

//! Deterministic synthetic datasets for tests and demos: a two-alternative
//! choice fixture whose predicted images are built to win, simulated
//! participant responses with logistic noise, a small caption corpus with
//! planted linear structure, and a writer that lays a complete input set out
//! on disk.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::embeddings::{EmbeddingSpace, ImageVectorStore};
use crate::simulate::{
    evaluate_trials, Choice, Distance, ResponseRow, ResponseSet, Setup, Trial, WordType,
};
use crate::zsg::{CaptionCorpus, CaptionSample, Split};

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

fn add_noise(rng: &mut ChaCha8Rng, base: &[f64], scale: f64) -> Vec<f64> {
    base.iter().map(|x| x + scale * gaussian(rng)).collect()
}

/// A complete in-memory choice experiment: embedding space, image vectors,
/// and trials (100 scored + 2 catch).
#[derive(Debug, Clone)]
pub struct ChoiceFixture {
    pub space: EmbeddingSpace,
    pub images: ImageVectorStore,
    pub trials: Vec<Trial>,
}

/// Build the choice fixture: 20 trials per design cell, each with a predicted
/// image aligned with the target word and a random image pointing the
/// opposite way, so the Max rule should select the predicted image on every
/// scored trial.
pub fn choice_fixture(seed: u64) -> ChoiceFixture {
    const DIM: usize = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cells = [
        (WordType::Abstract, Distance::Far),
        (WordType::Abstract, Distance::Near),
        (WordType::Concrete, Distance::Far),
        (WordType::Concrete, Distance::Near),
        (WordType::Concrete, Distance::Max),
    ];
    let mut words: Vec<(String, Vec<f64>)> = Vec::new();
    let mut images: Vec<(String, Vec<f64>)> = Vec::new();
    let mut trials = Vec::new();

    let build_trial = |rng: &mut ChaCha8Rng,
                       words: &mut Vec<(String, Vec<f64>)>,
                       images: &mut Vec<(String, Vec<f64>)>,
                       index: usize,
                       word_type: WordType,
                       distance: Distance,
                       is_catch: bool| {
        let direction = unit_vector(rng, DIM);
        let target = format!("w{index:03}");
        let target_scale = rng.random_range(0.8..1.2);
        words.push((
            target.clone(),
            direction.iter().map(|x| x * target_scale).collect(),
        ));
        let label_noise = rng.random_range(0.05..0.55);
        // Label counts vary per trial so the object-count covariates carry
        // information downstream.
        let pred_count = rng.random_range(2..=4usize);
        let rand_count = rng.random_range(2..=4usize);
        let mut pred_labels = Vec::new();
        let mut rand_labels = Vec::new();
        for j in 0..pred_count {
            let pred_word = format!("w{index:03}p{j}");
            words.push((pred_word.clone(), add_noise(rng, &direction, label_noise)));
            pred_labels.push(pred_word);
        }
        for j in 0..rand_count {
            let anti: Vec<f64> = direction.iter().map(|x| -x).collect();
            let rand_word = format!("w{index:03}r{j}");
            words.push((rand_word.clone(), add_noise(rng, &anti, label_noise)));
            rand_labels.push(rand_word);
        }
        let pred_image = format!("im{index:03}p");
        let rand_image = format!("im{index:03}r");
        images.push((pred_image.clone(), add_noise(rng, &direction, 0.1)));
        let anti: Vec<f64> = direction.iter().map(|x| -x).collect();
        images.push((rand_image.clone(), add_noise(rng, &anti, 0.1)));
        Trial::new(
            format!("t{index:03}"),
            target,
            word_type,
            distance,
            pred_image,
            rand_image,
            pred_labels,
            rand_labels,
            is_catch,
        )
        .expect("fixture trials respect the design invariants")
    };

    let mut index = 0;
    for (word_type, distance) in cells {
        for _ in 0..20 {
            trials.push(build_trial(
                &mut rng,
                &mut words,
                &mut images,
                index,
                word_type,
                distance,
                false,
            ));
            index += 1;
        }
    }
    for _ in 0..2 {
        trials.push(build_trial(
            &mut rng,
            &mut words,
            &mut images,
            index,
            WordType::Concrete,
            Distance::Far,
            true,
        ));
        index += 1;
    }

    ChoiceFixture {
        space: EmbeddingSpace::new("demo", words).expect("valid fixture space"),
        images: ImageVectorStore::new(images).expect("valid fixture images"),
        trials,
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Simulate participants whose choices follow the trial's similarity signal
/// through a logistic link with noise: stronger evidence for the predicted
/// image makes the predicted choice more likely.
pub fn responses_for(
    fixture: &ChoiceFixture,
    participants: usize,
    seed: u64,
    setup: Setup,
) -> ResponseSet {
    let eval = evaluate_trials(&fixture.trials, &fixture.space, &fixture.images, false)
        .expect("fixture evaluates cleanly");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for p in 0..participants {
        let participant_id = format!("p{p:02}");
        for row in &eval.rows {
            let evidence = row.measures.pred_sim - row.measures.rand_sim;
            let prob = sigmoid(1.5 * evidence);
            let choice = if rng.random::<f64>() < prob {
                Choice::Predicted
            } else {
                Choice::Random
            };
            rows.push(ResponseRow {
                participant_id: participant_id.clone(),
                trial_id: row.trial_id.clone(),
                choice,
            });
        }
    }
    let known = fixture.trials.iter().map(|t| t.trial_id.clone()).collect();
    ResponseSet::new(setup, rows, &known).expect("fixture responses validate")
}

/// Class membership pairs (target word ↦ its predicted image) for the
/// cross-modal mapping commands.
pub fn membership_csv(fixture: &ChoiceFixture) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("class,image_id\n");
    for trial in &fixture.trials {
        if !trial.is_catch {
            let _ = writeln!(out, "{},{}", trial.target, trial.pred_image_id);
        }
    }
    out
}

/// Captions over the fixture's predicted images: each caption lists the
/// image's labels plus the target word, all guaranteed in-vocabulary.
pub fn captions_tsv(fixture: &ChoiceFixture, from: usize, to: usize) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    for trial in &fixture.trials[from..to] {
        let mut tokens = vec![trial.target.clone()];
        tokens.extend(trial.pred_labels.iter().cloned());
        let _ = writeln!(out, "{}\t{}", trial.pred_image_id, tokens.join(" "));
    }
    out
}

/// Similarity benchmark over fixture words: scores are a monotone transform
/// of the true cosines, so evaluation should recover a high rank correlation.
pub fn benchmark_tsv(fixture: &ChoiceFixture, pairs: usize) -> String {
    use std::fmt::Write as _;
    let words: Vec<&str> = fixture.space.words().collect();
    let mut out = String::new();
    let mut count = 0;
    let mut step = 7usize;
    let mut i = 0usize;
    while count < pairs {
        let a = words[i % words.len()];
        let b = words[(i + step) % words.len()];
        if a != b {
            let cos = crate::embeddings::cosine(
                fixture.space.vector(a).unwrap(),
                fixture.space.vector(b).unwrap(),
            )
            .unwrap();
            let score = (cos + 1.0) * 5.0;
            let _ = writeln!(out, "{a}\t{b}\t{score}");
            count += 1;
        }
        i += 1;
        if i.is_multiple_of(words.len()) {
            step += 3;
        }
    }
    out
}

/// A small caption-grounding problem with planted linear structure: image
/// vectors are linear images of their caption words' mean plus noise, so a
/// trained alignment should beat its initialization clearly.
pub struct CaptionToy {
    pub space: EmbeddingSpace,
    pub images: ImageVectorStore,
    pub train: CaptionCorpus,
    pub validation: CaptionCorpus,
}

pub fn caption_toy(seed: u64) -> CaptionToy {
    const DIM: usize = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words: Vec<(String, Vec<f64>)> = (0..30)
        .map(|i| (format!("word{i:02}"), unit_vector(&mut rng, DIM)))
        .collect();
    // Planted ground-truth map: a fixed rotation-ish matrix.
    let planted: Vec<Vec<f64>> = (0..DIM).map(|_| unit_vector(&mut rng, DIM)).collect();
    let apply = |v: &[f64]| -> Vec<f64> {
        (0..DIM)
            .map(|j| (0..DIM).map(|i| v[i] * planted[i][j]).sum())
            .collect()
    };

    let mut images = Vec::new();
    let mut caption_lines: Vec<(String, Vec<String>)> = Vec::new();
    for im in 0..10 {
        let members: Vec<usize> = (0..3).map(|_| rng.random_range(0..words.len())).collect();
        let mut mean = vec![0.0; DIM];
        for &m in &members {
            for (j, x) in words[m].1.iter().enumerate() {
                mean[j] += x / members.len() as f64;
            }
        }
        let target = add_noise(&mut rng, &apply(&mean), 0.05);
        let id = format!("img{im:02}");
        images.push((id.clone(), target));
        for _ in 0..5 {
            let mut tokens: Vec<String> = members.iter().map(|&m| words[m].0.clone()).collect();
            tokens.shuffle(&mut rng);
            caption_lines.push((id.clone(), tokens));
        }
    }
    let space = EmbeddingSpace::new("toy", words).unwrap();
    let store = ImageVectorStore::new(images).unwrap();
    caption_lines.shuffle(&mut rng);
    let cut = caption_lines.len() - 10;
    let make = |lines: &[(String, Vec<String>)], split: Split| {
        CaptionCorpus::new(
            lines
                .iter()
                .map(|(id, tokens)| CaptionSample {
                    image_id: id.clone(),
                    tokens: tokens.clone(),
                })
                .collect(),
            split,
            &space,
            &store,
        )
        .unwrap()
    };
    CaptionToy {
        train: make(&caption_lines[..cut], Split::Train),
        validation: make(&caption_lines[cut..], Split::Validation),
        space,
        images: store,
    }
}

/// Paths of a demo dataset written by [`write_demo_dataset`].
#[derive(Debug, Clone)]
pub struct DemoFiles {
    pub embeddings: PathBuf,
    pub grounded_embeddings: PathBuf,
    pub images: PathBuf,
    pub membership: PathBuf,
    pub trials: PathBuf,
    pub responses: PathBuf,
    pub captions_train: PathBuf,
    pub captions_val: PathBuf,
    pub benchmark: PathBuf,
}

/// Write a complete, self-consistent input set under `dir`.
pub fn write_demo_dataset(dir: &Path, seed: u64) -> io::Result<DemoFiles> {
    let fixture = choice_fixture(seed);
    let responses = responses_for(&fixture, 5, seed.wrapping_add(1), Setup::Prototype);

    // A second space standing in for grounded vectors: the same words under
    // a mild deterministic perturbation, so comparisons have two sides.
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let grounded = EmbeddingSpace::new(
        "demo-grounded",
        fixture
            .space
            .iter()
            .map(|(w, v)| (w.to_string(), add_noise(&mut rng, v, 0.08)))
            .collect::<Vec<_>>(),
    )
    .expect("perturbed space is valid");

    let files = DemoFiles {
        embeddings: dir.join("embeddings.txt"),
        grounded_embeddings: dir.join("embeddings_grounded.txt"),
        images: dir.join("images.csv"),
        membership: dir.join("membership.csv"),
        trials: dir.join("trials.csv"),
        responses: dir.join("responses.csv"),
        captions_train: dir.join("captions_train.tsv"),
        captions_val: dir.join("captions_val.tsv"),
        benchmark: dir.join("benchmark.tsv"),
    };
    fs::create_dir_all(dir)?;
    fs::write(&files.embeddings, fixture.space.to_text())?;
    fs::write(&files.grounded_embeddings, grounded.to_text())?;
    fs::write(&files.images, fixture.images.to_csv())?;
    fs::write(&files.membership, membership_csv(&fixture))?;
    fs::write(&files.trials, crate::simulate::trials_csv(&fixture.trials))?;
    fs::write(&files.responses, responses.to_csv())?;
    fs::write(&files.captions_train, captions_tsv(&fixture, 0, 80))?;
    fs::write(&files.captions_val, captions_tsv(&fixture, 80, 100))?;
    fs::write(&files.benchmark, benchmark_tsv(&fixture, 40))?;
    Ok(files)
}

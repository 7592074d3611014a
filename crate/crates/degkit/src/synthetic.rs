//! Deterministic generators for synthetic fixtures.
//!
//! Used by the test suites and the acceptance harness: random nested
//! structures, random valid constructs, and a dataset whose targets follow a
//! known loop-context rule so learning can be checked against ground truth.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use statrs::distribution::Normal;

use crate::data::{BppMatrix, Construct, Dataset, DATA_TYPES};
use crate::structfeat::{annotate_loops, pair_table};

/// Generate a random nested dot-bracket structure of exactly `n` characters.
///
/// Hairpin interiors are at least 3 nt; bulges, internal loops, multiloops,
/// and top-level runs all occur with useful frequency.
pub fn random_nested_structure<R: Rng>(rng: &mut R, n: usize) -> String {
    let mut s = String::with_capacity(n);
    region(rng, n, &mut s);
    debug_assert_eq!(s.len(), n);
    s
}

fn region<R: Rng>(rng: &mut R, len: usize, out: &mut String) {
    let mut rem = len;
    while rem > 0 {
        if rem >= 5 && rng.gen_bool(0.6) {
            let block = rng.gen_range(5..=rem);
            helix_block(rng, block, out);
            rem -= block;
        } else {
            let dots = rng.gen_range(1..=rem.min(4));
            for _ in 0..dots {
                out.push('.');
            }
            rem -= dots;
        }
    }
}

fn helix_block<R: Rng>(rng: &mut R, len: usize, out: &mut String) {
    out.push('(');
    let inner = len - 2;
    if inner < 5 {
        for _ in 0..inner {
            out.push('.');
        }
    } else {
        match rng.gen_range(0..4) {
            0 => {
                for _ in 0..inner {
                    out.push('.');
                }
            }
            1 => helix_block(rng, inner, out),
            2 => {
                let l = rng.gen_range(0..=3.min(inner - 5));
                let r = rng.gen_range(0..=3.min(inner - 5 - l));
                for _ in 0..l {
                    out.push('.');
                }
                helix_block(rng, inner - l - r, out);
                for _ in 0..r {
                    out.push('.');
                }
            }
            _ => region(rng, inner, out),
        }
    }
    out.push(')');
}

/// Random sequence over {A,C,G,U}.
pub fn random_sequence<R: Rng>(rng: &mut R, n: usize) -> String {
    const BASES: [char; 4] = ['A', 'C', 'G', 'U'];
    (0..n).map(|_| BASES[rng.gen_range(0..4)]).collect()
}

/// A construct with the given structure, an all-A sequence, and no profiles.
pub fn construct_with_structure(id: &str, structure: &str) -> Construct {
    let n = structure.len();
    let loops = annotate_loops(&pair_table(structure).expect("valid structure"));
    Construct {
        id: id.to_string(),
        sequence: "A".repeat(n),
        structure: structure.to_string(),
        loop_string: loops,
        seq_length: n,
        seq_scored: n,
        scored_mask: vec![true; n],
        profiles: BTreeMap::new(),
        profile_errors: BTreeMap::new(),
        signal_to_noise: 0.0,
        sn_pass: false,
        synthetic: false,
    }
}

/// A fully unpaired construct with the given sequence and no profiles.
pub fn unstructured_construct(id: &str, sequence: &str) -> Construct {
    let n = sequence.len();
    Construct {
        id: id.to_string(),
        sequence: sequence.to_string(),
        structure: ".".repeat(n),
        loop_string: "E".repeat(n),
        seq_length: n,
        seq_scored: n,
        scored_mask: vec![true; n],
        profiles: BTreeMap::new(),
        profile_errors: BTreeMap::new(),
        signal_to_noise: 0.0,
        sn_pass: false,
        synthetic: false,
    }
}

/// Random valid construct with all five profiles over a scored prefix.
pub fn random_construct<R: Rng>(rng: &mut R, n: usize) -> Construct {
    let structure = random_nested_structure(rng, n);
    let sequence = random_sequence(rng, n);
    let loops = annotate_loops(&pair_table(&structure).unwrap());
    let seq_scored = rng.gen_range(n.saturating_sub(4).max(1)..=n);
    let mut profiles = BTreeMap::new();
    let mut errors = BTreeMap::new();
    for name in DATA_TYPES {
        let values: Vec<f64> = (0..seq_scored).map(|_| rng.gen_range(-0.5..3.0)).collect();
        let errs: Vec<f64> = (0..seq_scored).map(|_| rng.gen_range(0.05..0.15)).collect();
        profiles.insert(name.to_string(), values);
        errors.insert(name.to_string(), errs);
    }
    Construct {
        id: format!("c{:08x}", rng.gen::<u32>()),
        sequence,
        structure,
        loop_string: loops,
        seq_length: n,
        seq_scored,
        scored_mask: Construct::prefix_mask(n, seq_scored),
        profiles,
        profile_errors: errors,
        signal_to_noise: rng.gen_range(0.5..8.0),
        sn_pass: rng.gen_bool(0.7),
        synthetic: false,
    }
}

/// BPP matrix derived from a structure: each pair gets probability `p`.
pub fn bpp_from_structure(structure: &str, p: f64) -> BppMatrix {
    let pt = pair_table(structure).expect("valid structure");
    let n = pt.len();
    let mut raw = vec![0.0; n * n];
    for (i, j) in pt.pairs() {
        raw[i * n + j] = p;
        raw[j * n + i] = p;
    }
    BppMatrix::new(n, raw).expect("structure-derived BPP is valid")
}

/// Ground-truth target for the loop-rule generator.
///
/// Base level depends on the loop label; triloop hairpins sit highest,
/// mirroring the motif ordering seen in real data. Unpaired uracils gain a
/// fixed bonus, a base-by-structure interaction a purely linear window
/// model cannot represent.
pub fn loop_rule_value(label: char, run_len: usize, base: char) -> f64 {
    let level = match label {
        'S' => 0.3,
        'H' => {
            if run_len == 3 {
                2.5
            } else {
                1.6
            }
        }
        'B' => 1.8,
        'I' => 1.4,
        'M' => 1.2,
        _ => 1.0, // E, X
    };
    if base == 'U' && label != 'S' {
        level + 0.6
    } else {
        level
    }
}

/// Length of the maximal same-label run containing each position.
pub fn label_run_lengths(loop_string: &str) -> Vec<usize> {
    let labels: Vec<char> = loop_string.chars().collect();
    let n = labels.len();
    let mut lens = vec![0usize; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && labels[j] == labels[i] {
            j += 1;
        }
        for slot in lens.iter_mut().take(j).skip(i) {
            *slot = j - i;
        }
        i = j;
    }
    lens
}

/// Noise-free loop-rule target profile for a construct (scored positions only).
pub fn loop_rule_profile(c: &Construct) -> Vec<f64> {
    let labels: Vec<char> = c.loop_string.chars().collect();
    let bases: Vec<char> = c.sequence.chars().collect();
    let runs = label_run_lengths(&c.loop_string);
    c.scored_positions()
        .iter()
        .map(|&k| loop_rule_value(labels[k], runs[k], bases[k]))
        .collect()
}

/// Synthetic dataset whose targets follow [`loop_rule_value`] plus Gaussian
/// noise of the given standard deviation. All five data types carry the same
/// rule with independent noise; BPP matrices are structure-derived.
pub fn loop_rule_dataset(seed: u64, count: usize, len: usize, noise_sd: f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sd.max(1e-12)).unwrap();
    let mut constructs = Vec::with_capacity(count);
    let mut bpps = BTreeMap::new();
    for idx in 0..count {
        let structure = random_nested_structure(&mut rng, len);
        let sequence = random_sequence(&mut rng, len);
        let loops = annotate_loops(&pair_table(&structure).unwrap());
        let seq_scored = len - 4.min(len - 1);
        let mut c = Construct {
            id: format!("syn{idx:04}"),
            sequence,
            structure,
            loop_string: loops,
            seq_length: len,
            seq_scored,
            scored_mask: Construct::prefix_mask(len, seq_scored),
            profiles: BTreeMap::new(),
            profile_errors: BTreeMap::new(),
            signal_to_noise: 0.0,
            sn_pass: true,
            synthetic: false,
        };
        let clean = loop_rule_profile(&c);
        let mut sn_acc = 0.0;
        for name in DATA_TYPES {
            let values: Vec<f64> = clean
                .iter()
                .map(|&v| v + if noise_sd > 0.0 { rng.sample(normal) } else { 0.0 })
                .collect();
            let errs: Vec<f64> = (0..seq_scored).map(|_| rng.gen_range(0.05..0.15)).collect();
            sn_acc += values
                .iter()
                .zip(&errs)
                .map(|(v, e)| v / e)
                .sum::<f64>()
                / seq_scored as f64;
            c.profiles.insert(name.to_string(), values);
            c.profile_errors.insert(name.to_string(), errs);
        }
        c.signal_to_noise = sn_acc / DATA_TYPES.len() as f64;
        bpps.insert(c.id.clone(), bpp_from_structure(&c.structure, 0.9));
        constructs.push(c);
    }
    Dataset { constructs, bpps }
}

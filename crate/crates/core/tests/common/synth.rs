//! Synthetic picture-description corpus with two generative distributions.
//!
//! Control speakers name things with a rich set of nouns and verbs.
//! Dementia speakers fall back on a few generic high-frequency words for
//! most of those slots. Every speaker also has a personal rate of
//! off-topic interjections drawn from a pool shared by both groups; it
//! shifts both perplexities of a transcript together, so raw perplexities
//! are confounded while their difference is not.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pplab_core::corpus::{Corpus, Group, ParticipantRecord, TokenSequence, EOS_TOKEN};
use pplab_core::interrogation::{generate_variants, SubstitutionTable};
use pplab_core::FrequencyBand;

pub const NOUNS: &[&str] = &[
    "boy", "girl", "mother", "cookie", "jar", "stool", "sink", "water", "dish", "plate",
    "window", "curtain", "cupboard", "floor", "kitchen", "garden", "counter", "faucet",
    "apron", "towel", "shelf", "lid", "cup", "bowl",
];
pub const VERBS: &[&str] = &[
    "taking", "reaching", "washing", "drying", "falling", "spilling", "overflowing",
    "holding", "standing", "climbing", "grabbing", "wiping", "looking", "handing", "tipping",
];
const ADJS: &[&str] = &["little", "tall", "wet", "open", "full", "young", "big"];
const PREPS: &[&str] = &["on", "from", "in", "at", "over", "under", "near"];
pub const GENERIC_NOUNS: &[&str] = &["thing", "stuff", "one", "there"];
pub const GENERIC_VERBS: &[&str] = &["doing", "going", "getting", "having"];

fn pool() -> Vec<String> {
    (0..40).map(|i| format!("aside{i}")).collect()
}

#[derive(Debug, Clone)]
pub struct SynthParams {
    pub participants_per_group: usize,
    /// Probability a dementia speaker uses a generic word in a noun or
    /// verb slot.
    pub generic_rate: f64,
    /// The same probability for control speakers.
    pub control_generic_rate: f64,
    pub max_interjection_rate: f64,
    pub sentences: (usize, usize),
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            participants_per_group: 20,
            generic_rate: 0.6,
            control_generic_rate: 0.05,
            max_interjection_rate: 0.6,
            sentences: (8, 14),
        }
    }
}

fn sentence(rng: &mut ChaCha8Rng, generic: f64) -> Vec<String> {
    let noun = |rng: &mut ChaCha8Rng| -> String {
        if rng.gen_bool(generic) {
            GENERIC_NOUNS.choose(rng).unwrap().to_string()
        } else {
            NOUNS.choose(rng).unwrap().to_string()
        }
    };
    let n1 = noun(rng);
    let n2 = noun(rng);
    let verb = if rng.gen_bool(generic) {
        GENERIC_VERBS.choose(rng).unwrap()
    } else {
        VERBS.choose(rng).unwrap()
    };
    let adj = ADJS.choose(rng).unwrap();
    let prep = PREPS.choose(rng).unwrap();
    let words: Vec<&str> = match rng.gen_range(0..4) {
        0 => vec!["the", &n1, "is", verb, "the", &n2],
        1 => vec!["she", "is", verb, prep, "the", &n1],
        2 => vec!["and", "the", &n1, "is", verb, prep, "the", &n2],
        _ => vec!["the", adj, &n1, "is", verb],
    };
    words.into_iter().map(String::from).collect()
}

fn transcript(rng: &mut ChaCha8Rng, p: &SynthParams, generic: f64, interjection: f64, pid: &str, visit: u32) -> TokenSequence {
    let pool = pool();
    let mut tokens = Vec::new();
    for _ in 0..rng.gen_range(p.sentences.0..=p.sentences.1) {
        for w in sentence(rng, generic) {
            tokens.push(w);
            if rng.gen_bool(interjection) {
                tokens.push(pool.choose(rng).unwrap().clone());
            }
        }
        tokens.push(EOS_TOKEN.to_string());
    }
    TokenSequence::new(pid, visit, tokens)
}

pub fn synthetic_corpus(params: &SynthParams, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut participants = Vec::new();
    for (group, prefix, generic) in [
        (Group::Control, "con", params.control_generic_rate),
        (Group::Dementia, "dem", params.generic_rate),
    ] {
        for i in 0..params.participants_per_group {
            let pid = format!("{prefix}{i:02}");
            let interjection = rng.gen_range(0.0..params.max_interjection_rate);
            let visits = rng.gen_range(1..=3);
            let transcripts = (0..visits)
                .map(|v| transcript(&mut rng, params, generic, interjection, &pid, v))
                .collect();
            participants.push(ParticipantRecord {
                participant_id: pid,
                group,
                age_at_baseline: None,
                education: None,
                transcripts,
                mmse_history: Vec::new(),
            });
        }
    }
    Corpus::new(participants).expect("synthetic corpus is well formed")
}

/// A rich control-style narrative and its six band variants. Each band
/// turns a few more content words into generic ones.
pub fn perturbation_variants() -> Vec<(FrequencyBand, TokenSequence)> {
    let text = "the mother is washing the dish . the boy is climbing the stool . \
                the girl is reaching from the shelf . the water is spilling on the floor . \
                she is drying the plate . the stool is tipping . \
                and the boy is grabbing the cookie from the jar . the sink is overflowing . \
                the little girl is looking . she is holding the towel near the window";
    let mut tokens = Vec::new();
    for w in text.split_whitespace() {
        if w == "." {
            tokens.push(EOS_TOKEN.to_string());
        } else {
            tokens.push(w.to_string());
        }
    }
    tokens.push(EOS_TOKEN.to_string());
    let base = TokenSequence::new("narrative", 0, tokens);

    let plan: [(FrequencyBand, &[(&str, &str)]); 5] = [
        (FrequencyBand::From05To10, &[("overflowing", "going"), ("towel", "thing")]),
        (FrequencyBand::From10To15, &[("stool", "thing"), ("shelf", "stuff"), ("tipping", "going")]),
        (FrequencyBand::From15To20, &[("dish", "stuff"), ("plate", "thing"), ("drying", "doing")]),
        (FrequencyBand::From20To25, &[("cookie", "one"), ("jar", "thing"), ("grabbing", "getting"), ("spilling", "going")]),
        (FrequencyBand::From25To30, &[("washing", "doing"), ("climbing", "getting"), ("reaching", "getting"), ("floor", "there"), ("window", "there")]),
    ];
    let mut table = SubstitutionTable::new();
    for (band, subs) in plan {
        for (word, rep) in subs {
            table.insert(word, band, Some(rep)).unwrap();
        }
    }
    generate_variants(&base, &table)
}

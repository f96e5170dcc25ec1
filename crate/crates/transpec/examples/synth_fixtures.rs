//! Regenerates the shipped replay store under `fixtures/paper/`.
//!
//! The published comparisons only give 3-decimal cosine scores; the original
//! embedding vectors are not available. This writes a synthetic snapshot:
//! for each source a random unit vector `s`, and for each candidate text with
//! published score `c` the unit vector `c·s + sqrt(1 - c²)·r`, where `r` is a
//! random unit vector orthogonal to `s`. Cosines then reproduce the published
//! scores to ~1e-16. Chat entries are keyed by prompts built with the library
//! builders, so replay hits exactly what `translate` sends.
//!
//! ```text
//! cargo run -p transpec --example synth_fixtures [OUT_DIR]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde_json::json;
use transpec::config::{DEFAULT_CHAT_MODEL, DEFAULT_EMBED_MODEL};
use transpec::fixtures::{FixtureEntry, FixtureKind, FixtureOutput, FixtureStore};
use transpec_core::{
    build_prompt, cosine, Embedding, EntityFrame, LanguagePair, LanguageTag, PromptStrategy, SourceSegment,
    TranslationSpec,
};

const DIM: usize = 1536;
const SEED: u64 = 1536;

struct Row {
    label: &'static str,
    text: &'static str,
    score: f64,
}

const fn row(label: &'static str, text: &'static str, score: f64) -> Row {
    Row { label, text, score }
}

struct Comparison {
    set: &'static str,
    source: &'static str,
    spec: Option<(&'static str, &'static str)>,
    strategy: PromptStrategy,
    references: [Row; 3],
    generated: [Row; 3],
}

const COSMETICS: &str = "私たちが開発したファンデーションはあなたの自然な美しさを引き立てます。シームレスに肌に溶け込み、まるで素肌そのもののような仕上がりを提供します。";
const POT_IDIOM: &str = "私たちは同じ釜の飯を食べた仲です。";
const MISORA: &str = "彼女の歌声は美空ひばりを彷彿とさせる。";

const SINGER_FRAME: &str = "Her singing voice is reminiscent of {ENTITY}.";
const SINGERS: [(&str, f64); 4] =
    [("Hibari Misora", 0.876), ("Judy Garland", 0.826), ("Billie Holiday", 0.823), ("Ella Fitzgerald", 0.833)];

fn comparisons(pair: &LanguagePair) -> Vec<Comparison> {
    vec![
        Comparison {
            set: "marketing_copy",
            source: COSMETICS,
            spec: Some(("To market our own brand of cosmetics and to be displayed on our website", "Women in their 20s")),
            strategy: PromptStrategy::SpecConditioned,
            references: [
                row("DL", "Our foundations enhance your natural beauty. They blend seamlessly into the skin and provide a finish that looks like your skin itself.", 0.861),
                row("GT", "Our foundations are designed to enhance your natural beauty. It blends seamlessly into the skin and provides a finish that looks like bare skin itself.", 0.868),
                row("GPT", "The foundation we developed enhances your natural beauty. It seamlessly blends into your skin, providing a finish that feels just like your own bare skin.", 0.873),
            ],
            generated: [
                row("v1", "Our newly developed foundation enhances your natural beauty. It blends seamlessly into your skin, providing a finish that’s just like your own bare skin.", 0.870),
                row("v2", "Experience the natural beauty enhancement with our specially designed foundation. Its unique formulation blends effortlessly into your skin, giving the impression of flawless, bare skin.", 0.863),
                row("v3", "The foundation we’ve created serves to amplify your inherent beauty. Seamlessly melting into your skin, it leaves you with a finish indistinguishable from your natural skin.", 0.875),
            ],
        },
        Comparison {
            set: "pot_idiom",
            source: POT_IDIOM,
            spec: Some((
                "Use natural expressions that can be understood by English speakers who are not very familiar with Japanese culture.",
                "General English-speaking audience.",
            )),
            strategy: PromptStrategy::SpecConditioned,
            references: [
                row("DL", "We are friends who ate out of the same pot.", 0.772),
                row("GT", "We ate rice from the same pot.", 0.727),
                row("GPT", "We ate rice from the same pot.", 0.727),
            ],
            generated: [
                row("v1", "We have shared the same pot of rice.", 0.743),
                row("v2", "We have been through thick and thin together.", 0.759),
                row("v3", "We’ve broken bread together.", 0.744),
            ],
        },
        Comparison {
            set: "singer_dynamic_equivalence",
            source: MISORA,
            spec: None,
            strategy: PromptStrategy::default_dynamic_equivalence(pair),
            references: [
                row("DL", "Her singing voice is reminiscent of Hibari Misora.", 0.876),
                row("GT", "Her singing voice is reminiscent of Hibari Misora.", 0.876),
                row("GPT", "Her singing voice reminds me of Misora Hibari.", 0.873),
            ],
            generated: [
                row("v1", "Her singing voice evokes memories of Judy Garland.", 0.830),
                row("v2", "Her singing voice is reminiscent of Billie Holiday.", 0.823),
                row("v3", "Listening to her sing, one can’t help but think of Ella Fitzgerald.", 0.826),
            ],
        },
    ]
}

/// Purpose and audience used for the singer spec file; the dynamic-equivalence
/// prompt does not render them but spec files must carry both.
const SINGER_SPEC: (&str, &str) = (
    "Convey the cultural reference so that English-speaking readers react as Japanese readers would.",
    "General English-speaking audience.",
);

fn gaussian_unit(rng: &mut ChaCha20Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..DIM).map(|_| rng.sample(StandardNormal)).collect();
    normalize(v)
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit vector at cosine `c` from unit vector `s`.
fn at_cosine(s: &[f64], c: f64, rng: &mut ChaCha20Rng) -> Vec<f64> {
    let mut r = gaussian_unit(rng);
    // Two Gram-Schmidt passes keep r orthogonal to s to rounding error.
    for _ in 0..2 {
        let p = dot(&r, s);
        r.iter_mut().zip(s).for_each(|(ri, si)| *ri -= p * si);
        r = normalize(r);
    }
    let k = (1.0 - c * c).sqrt();
    normalize(s.iter().zip(&r).map(|(si, ri)| c * si + k * ri).collect())
}

struct Writer {
    store: FixtureStore,
    rng: ChaCha20Rng,
    embeddings: BTreeMap<String, Vec<f64>>,
    manifest: Vec<serde_json::Value>,
}

impl Writer {
    fn put(&mut self, set: &str, role: &str, kind: FixtureKind, model: &str, input: &str, output: FixtureOutput) {
        let entry = FixtureEntry::new(kind, model, input, output);
        self.store.put(&entry).expect("write fixture");
        self.manifest.push(json!({
            "file": format!("{}.json", entry.input_sha256),
            "set": set,
            "role": role,
            "kind": kind.as_str(),
            "input_prefix": input.chars().take(60).collect::<String>(),
        }));
    }

    fn source(&mut self, set: &str, text: &str) -> Vec<f64> {
        if let Some(v) = self.embeddings.get(text) {
            return v.clone();
        }
        let v = gaussian_unit(&mut self.rng);
        self.embeddings.insert(text.to_owned(), v.clone());
        self.put(set, "source", FixtureKind::Embed, DEFAULT_EMBED_MODEL, text, FixtureOutput::Vector(v.clone()));
        v
    }

    fn candidate(&mut self, set: &str, label: &str, s: &[f64], text: &str, score: f64) {
        if let Some(v) = self.embeddings.get(text) {
            let c = dot(v, s);
            assert!((c - score).abs() < 1e-12, "{text:?} already embedded at cosine {c}, wanted {score}");
            return;
        }
        let v = at_cosine(s, score, &mut self.rng);
        self.embeddings.insert(text.to_owned(), v.clone());
        self.put(set, label, FixtureKind::Embed, DEFAULT_EMBED_MODEL, text, FixtureOutput::Vector(v));
    }
}

fn write_json(path: &Path, value: &serde_json::Value) {
    let mut text = serde_json::to_string_pretty(value).unwrap();
    text.push('\n');
    std::fs::write(path, text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
}

fn spec_json(pair: &LanguagePair, purpose: &str, audience: &str) -> serde_json::Value {
    json!({
        "source_lang": pair.source().as_str(),
        "target_lang": pair.target().as_str(),
        "purpose": purpose,
        "target_audience": audience,
    })
}

fn main() {
    let out: PathBuf = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/paper"));
    std::fs::create_dir_all(out.join("inputs")).unwrap();
    for entry in std::fs::read_dir(&out).unwrap().flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        let hashed = name.len() == 69 && name.ends_with(".json") && name[..64].bytes().all(|b| b.is_ascii_hexdigit());
        if hashed {
            std::fs::remove_file(entry.path()).unwrap();
        }
    }

    let pair = LanguagePair::new(LanguageTag::new("ja").unwrap(), LanguageTag::new("en").unwrap()).unwrap();
    let mut w = Writer {
        store: FixtureStore::new(&out),
        rng: ChaCha20Rng::seed_from_u64(SEED),
        embeddings: BTreeMap::new(),
        manifest: Vec::new(),
    };

    for cmp in comparisons(&pair) {
        let (purpose, audience) = cmp.spec.unwrap_or(SINGER_SPEC);
        let spec = TranslationSpec::new(pair.clone(), purpose, audience);
        write_json(&out.join(format!("inputs/{}_spec.json", cmp.set)), &spec_json(&pair, purpose, audience));
        let refs: Vec<_> = cmp.references.iter().map(|r| json!({"label": r.label, "text": r.text})).collect();
        write_json(&out.join(format!("inputs/{}_refs.json", cmp.set)), &json!(refs));
        std::fs::write(out.join(format!("inputs/{}_source.txt", cmp.set)), format!("{}\n", cmp.source)).unwrap();

        let segment = SourceSegment::new("seg-1", cmp.source).unwrap();
        let prompt = build_prompt(&segment, &spec, &cmp.strategy, 3).unwrap();
        let response = cmp
            .generated
            .iter()
            .enumerate()
            .map(|(i, r)| format!("{}. {}", i + 1, r.text))
            .collect::<Vec<_>>()
            .join("\n");
        w.put(
            cmp.set,
            "generation",
            FixtureKind::Chat,
            DEFAULT_CHAT_MODEL,
            &prompt.text,
            FixtureOutput::Text(response),
        );

        let baseline = build_prompt(&segment, &spec, &PromptStrategy::Baseline, 1).unwrap();
        let gpt = cmp.references.iter().find(|r| r.label == "GPT").unwrap();
        w.put(
            cmp.set,
            "baseline",
            FixtureKind::Chat,
            DEFAULT_CHAT_MODEL,
            &baseline.text,
            FixtureOutput::Text(gpt.text.to_owned()),
        );

        let s = w.source(cmp.set, cmp.source);
        for r in cmp.references.iter().chain(&cmp.generated) {
            w.candidate(cmp.set, r.label, &s, r.text, r.score);
        }
    }

    let s = w.source("singer_substitution", MISORA);
    let frame = EntityFrame::parse(SINGER_FRAME).unwrap();
    for (name, score) in SINGERS {
        w.candidate("singer_substitution", name, &s, &frame.render(name), score);
    }
    let names: Vec<&str> = SINGERS.iter().map(|(n, _)| *n).collect();
    write_json(&out.join("inputs/singer_substitution_entities.json"), &json!(names));
    std::fs::write(out.join("inputs/singer_substitution_frame.txt"), format!("{SINGER_FRAME}\n")).unwrap();

    // Check the snapshot through the library cosine before declaring success.
    for (text, v) in &w.embeddings {
        let e = Embedding::new(v.clone(), DEFAULT_EMBED_MODEL).unwrap();
        assert_eq!(e.dimension(), DIM, "{text}");
        let norm = cosine(&e, &e).unwrap();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    w.manifest.sort_by(|a, b| (a["set"].as_str(), a["role"].as_str()).cmp(&(b["set"].as_str(), b["role"].as_str())));
    write_json(
        &out.join("manifest.json"),
        &json!({
            "synthetic": true,
            "note": "Embedding vectors are a synthetic snapshot calibrated so cosine similarities equal the published 3-decimal scores; they are not real model outputs.",
            "dimension": DIM,
            "seed": SEED,
            "chat_model": DEFAULT_CHAT_MODEL,
            "embed_model": DEFAULT_EMBED_MODEL,
            "entries": w.manifest,
        }),
    );
    eprintln!("wrote {} fixtures to {}", w.manifest.len(), out.display());
}

//! Session persistence property, shared by `persistence_props` and the
//! acceptance runner.

use chrono::{DateTime, TimeZone, Utc};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use transpec::config::Mode;
use transpec::store::{ProviderMeta, Selection, SessionRecord, SessionStore};
use transpec_core::{
    build_prompt, rank_candidates, Candidate, Embedding, LanguagePair, LanguageTag, PromptStrategy, SourceSegment,
    TranslationSpec,
};

fn text() -> impl Strategy<Value = String> {
    "\\PC{1,24}".prop_filter("non-blank", |s| !s.trim().is_empty())
}

fn timestamp() -> impl Strategy<Value = DateTime<Utc>> {
    (0i64..4_000_000_000, 0u32..1_000_000_000).prop_map(|(s, ns)| Utc.timestamp_opt(s, ns).unwrap())
}

fn selection() -> impl Strategy<Value = Selection> {
    ("v[1-3]", proptest::option::of("\\PC{0,20}"), timestamp())
        .prop_map(|(label, edited_text, selected_at)| Selection { label, edited_text, selected_at })
}

prop_compose! {
    pub fn record()(
        id in "[A-Za-z0-9][A-Za-z0-9-]{0,40}",
        created_at in timestamp(),
        segment in text(),
        purpose in text(),
        audience in text(),
        register in proptest::option::of(text()),
        kind in 0usize..3,
        raw_response in "\\PC{0,60}",
        texts in proptest::collection::vec(text(), 1..6),
        vectors in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 4), 7),
        history in proptest::collection::vec(selection(), 0..4),
        key in proptest::option::of("[a-z0-9-]{1,16}"),
        mode in prop_oneof![Just(Mode::Live), Just(Mode::Replay), Just(Mode::Record)],
    ) -> SessionRecord {
        let pair = LanguagePair::new(LanguageTag::new("ja").unwrap(), LanguageTag::new("en").unwrap()).unwrap();
        let mut spec = TranslationSpec::new(pair.clone(), &purpose, &audience);
        spec.register = register;
        let strategy = match kind {
            0 => PromptStrategy::Baseline,
            1 => PromptStrategy::SpecConditioned,
            _ => PromptStrategy::default_dynamic_equivalence(&pair),
        };
        let segment = SourceSegment::new("seg-1", segment).unwrap();
        let prompt = build_prompt(&segment, &spec, &strategy, 1).unwrap();
        let embed = |i: usize| {
            let mut v = vectors[i].clone();
            v[0] += 2.0;
            Embedding::new(v, "ada").unwrap()
        };
        let candidates: Vec<Candidate> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Candidate::generated(format!("v{}", i + 1), t.clone()))
            .collect();
        let pairs = candidates.iter().cloned().enumerate().map(|(i, c)| (c, embed(i + 1))).collect();
        let report = rank_candidates(&segment.text, &embed(0), pairs).unwrap();
        SessionRecord {
            session_id: id,
            created_at,
            spec,
            segment,
            strategy,
            prompt,
            raw_response,
            candidates,
            report,
            selection: history.last().cloned(),
            selection_history: history,
            provider_meta: ProviderMeta { chat_model: "gpt-4".into(), embed_model: "ada".into(), mode },
            idempotency_key: key,
        }
    }
}

pub fn saveable_record() -> impl Strategy<Value = SessionRecord> {
    record().prop_filter("reserved id", |r| r.session_id != "index")
}

pub fn check_session_round_trip(r: SessionRecord) -> Result<(), TestCaseError> {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    store.save(&r).unwrap();
    let loaded = store.load(&r.session_id).unwrap();
    prop_assert_eq!(&loaded, &r);
    let bits = |x: &SessionRecord| x.report.scores().iter().map(|s| s.to_bits()).collect::<Vec<_>>();
    prop_assert_eq!(bits(&loaded), bits(&r));

    let index = store.list().unwrap();
    prop_assert_eq!(index.len(), 1);
    prop_assert_eq!(&index[0].session_id, &r.session_id);
    prop_assert_eq!(index[0].created_at, r.created_at);
    prop_assert_eq!(&index[0].source, &r.segment.text);
    if let Some(k) = &r.idempotency_key {
        prop_assert_eq!(store.find_by_idempotency_key(k).unwrap(), Some(r.session_id.clone()));
    }

    // A reopened store sees the same data.
    let reopened = SessionStore::open(dir.path()).unwrap();
    prop_assert_eq!(reopened.load(&r.session_id).unwrap(), r);
    Ok(())
}

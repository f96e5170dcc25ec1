//! End-to-end translation runs: prompt, generate, parse, embed, rank, persist.

use std::collections::HashSet;
use std::sync::Arc;

use chrono::Utc;
use futures::future::try_join_all;
use transpec_core::{
    build_prompt, parse_candidates, rank_candidates, render, validate_spec, Candidate, CandidateParseError,
    EntityFrame, FrameError, Origin, PromptError, PromptStrategy, RankError, RankedReport, ReportFormat, SourceSegment,
    SpecError, TranslationSpec, MAX_CANDIDATES,
};

use crate::config::{Config, Sampling};
use crate::gateway::{Gateway, GenerationRequest, ProviderError};
use crate::store::{ProviderMeta, Selection, SessionRecord, SessionStore, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("{message}")]
    Invalid { code: &'static str, message: String },
    #[error("could not parse model response: {0}")]
    Parse(#[from] CandidateParseError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("session {session_id} has no candidate labelled {label:?}")]
    UnknownLabel { session_id: String, label: String },
}

/// Which layer an error belongs to; drives CLI exit codes and HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    UnknownLabel,
    NotFound,
    Provider,
    Persistence,
}

impl PipelineError {
    pub fn invalid(code: &'static str, message: impl Into<String>) -> Self {
        Self::Invalid { code, message: message.into() }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Self::Spec(_) | Self::Prompt(_) | Self::Frame(_) | Self::Invalid { .. } => ErrorClass::Validation,
            Self::Rank(RankError::DuplicateLabel(_) | RankError::EmptyText(_)) => ErrorClass::Validation,
            Self::Rank(_) | Self::Parse(_) | Self::Provider(_) => ErrorClass::Provider,
            Self::Store(StoreError::NotFound(_)) => ErrorClass::NotFound,
            Self::Store(_) => ErrorClass::Persistence,
            Self::UnknownLabel { .. } => ErrorClass::UnknownLabel,
        }
    }

    pub fn code(&self) -> String {
        match self {
            Self::Spec(e) => e.code(),
            Self::Prompt(e) => e.code(),
            Self::Frame(e) => e.code().into(),
            Self::Invalid { code, .. } => (*code).into(),
            Self::Parse(_) => "provider.unparseable_response".into(),
            Self::Rank(RankError::DuplicateLabel(_)) => "candidates.duplicate_label".into(),
            Self::Rank(RankError::EmptyText(_)) => "candidates.empty_text".into(),
            Self::Rank(_) => "provider.embedding_mismatch".into(),
            Self::Provider(e) => e.code().into(),
            Self::Store(StoreError::NotFound(_)) => "session.not_found".into(),
            Self::Store(_) => "store.io".into(),
            Self::UnknownLabel { .. } => "selection.unknown_label".into(),
        }
    }
}

/// What to run: everything `run_session` needs besides the providers.
#[derive(Debug, Clone)]
pub struct SessionRequest {
    pub spec: TranslationSpec,
    pub segment: SourceSegment,
    pub strategy: PromptStrategy,
    pub n: usize,
    pub references: Vec<ReferenceInput>,
    pub idempotency_key: Option<String>,
}

/// A reference translation supplied by the caller, e.g. an MT engine output.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceInput {
    pub label: String,
    pub text: String,
}

impl ReferenceInput {
    pub fn new(label: impl Into<String>, text: impl Into<String>) -> Self {
        Self { label: label.into(), text: text.into() }
    }
}

pub fn generated_label(i: usize) -> String {
    format!("v{i}")
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    gateway: Gateway,
    store: Arc<SessionStore>,
    chat_model: String,
    embed_model: String,
    temperature: f64,
    max_tokens: u32,
    sampling: Sampling,
}

impl Pipeline {
    pub fn new(config: &Config, gateway: Gateway, store: Arc<SessionStore>) -> Self {
        Self {
            gateway,
            store,
            chat_model: config.chat_model.clone(),
            embed_model: config.embed_model.clone(),
            temperature: config.temperature,
            max_tokens: config.max_tokens,
            sampling: config.sampling,
        }
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    pub fn embed_model(&self) -> &str {
        &self.embed_model
    }

    fn request(&self, prompt: &str, sample: Option<u32>) -> GenerationRequest {
        GenerationRequest {
            prompt: prompt.to_owned(),
            model_id: self.chat_model.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            sample,
        }
    }

    fn check_references(references: &[ReferenceInput], n: usize) -> Result<Vec<Candidate>, PipelineError> {
        let generated: HashSet<String> = (1..=n).map(generated_label).collect();
        let mut seen = HashSet::new();
        references
            .iter()
            .map(|r| {
                if r.label.trim().is_empty() {
                    return Err(PipelineError::invalid("references.empty_label", "reference label must not be empty"));
                }
                if r.text.trim().is_empty() {
                    return Err(PipelineError::invalid(
                        "references.empty_text",
                        format!("reference {:?} has empty text", r.label),
                    ));
                }
                if generated.contains(&r.label) {
                    return Err(PipelineError::invalid(
                        "references.label_collision",
                        format!("reference label {:?} collides with a generated label", r.label),
                    ));
                }
                if !seen.insert(r.label.clone()) {
                    return Err(PipelineError::invalid(
                        "references.duplicate_label",
                        format!("duplicate reference label {:?}", r.label),
                    ));
                }
                Ok(Candidate::reference(r.label.clone(), r.text.clone()))
            })
            .collect()
    }

    /// Generates `n` candidates, merges the references ahead of them, ranks
    /// everything against the source and persists the session. Nothing is
    /// written unless every step succeeds.
    pub async fn run_session(&self, req: SessionRequest) -> Result<SessionRecord, PipelineError> {
        let SessionRequest { spec, segment, strategy, n, references, idempotency_key } = req;
        if n == 0 || n > MAX_CANDIDATES {
            return Err(PromptError::CandidateCount(n).into());
        }
        validate_spec(&spec, &strategy)
            .map_err(|violations| SpecError::Invalid { strategy: strategy.kind(), violations })?;
        let references = Self::check_references(&references, n)?;

        let (prompt, raw_response, texts) = match self.sampling {
            Sampling::SingleResponse => {
                let prompt = build_prompt(&segment, &spec, &strategy, n)?;
                let raw = self.gateway.generate(&self.request(&prompt.text, None)).await?;
                let texts = parse_candidates(&raw, n)?;
                (prompt, raw, texts)
            }
            Sampling::Independent => {
                let prompt = build_prompt(&segment, &spec, &strategy, 1)?;
                let calls = (1..=n as u32).map(|k| {
                    let request = self.request(&prompt.text, Some(k));
                    async move { self.gateway.generate(&request).await }
                });
                let responses = try_join_all(calls).await?;
                let mut texts = Vec::with_capacity(n);
                for r in &responses {
                    texts.extend(parse_candidates(r, 1)?);
                }
                let raw =
                    texts.iter().enumerate().map(|(i, t)| format!("{}. {t}", i + 1)).collect::<Vec<_>>().join("\n");
                (prompt, raw, texts)
            }
        };

        let mut candidates = references;
        candidates.extend(
            texts
                .into_iter()
                .enumerate()
                .map(|(i, text)| Candidate::new(generated_label(i + 1), text, Origin::Generated)),
        );

        let report = self.score(&segment.text, &candidates).await?;
        let record = SessionRecord {
            session_id: uuid::Uuid::new_v4().to_string(),
            created_at: Utc::now(),
            spec,
            segment,
            strategy,
            prompt,
            raw_response,
            candidates,
            report,
            selection: None,
            selection_history: Vec::new(),
            provider_meta: ProviderMeta {
                chat_model: self.chat_model.clone(),
                embed_model: self.embed_model.clone(),
                mode: self.gateway.mode(),
            },
            idempotency_key,
        };
        self.store.save(&record)?;
        Ok(record)
    }

    /// Embeds the source and every candidate concurrently and ranks them.
    pub async fn score(&self, source: &str, candidates: &[Candidate]) -> Result<RankedReport, PipelineError> {
        let model = self.embed_model.as_str();
        let source_vec = self.gateway.embed(source, model);
        let candidate_vecs = try_join_all(candidates.iter().map(|c| self.gateway.embed(&c.text, model)));
        let (source_vec, candidate_vecs) = futures::try_join!(source_vec, candidate_vecs)?;
        let pairs = candidates.iter().cloned().zip(candidate_vecs).collect();
        Ok(rank_candidates(source, &source_vec, pairs)?)
    }

    pub fn record_selection(
        &self,
        session_id: &str,
        label: &str,
        edited_text: Option<String>,
    ) -> Result<SessionRecord, PipelineError> {
        let outcome = self.store.update(session_id, |record| {
            if record.report.entry(label).is_none() {
                return Err(PipelineError::UnknownLabel { session_id: session_id.to_owned(), label: label.to_owned() });
            }
            let selection =
                Selection { label: label.to_owned(), edited_text: edited_text.clone(), selected_at: Utc::now() };
            record.selection_history.push(selection.clone());
            record.selection = Some(selection);
            Ok(())
        })?;
        outcome
    }

    pub fn emit_report(&self, session_id: &str, format: ReportFormat) -> Result<String, PipelineError> {
        let record = self.store.load(session_id)?;
        Ok(render(&record.report, format))
    }

    /// Renders `frame` once per entity, embeds each sentence and ranks them
    /// against the source. Labels are the entity names; a repeated entity
    /// gets a ` #2`, ` #3`, ... suffix so labels stay unique.
    pub async fn substitution_analysis(
        &self,
        frame: &str,
        entities: &[String],
        source: &str,
    ) -> Result<RankedReport, PipelineError> {
        let frame = EntityFrame::parse(frame)?;
        let sentences = frame.render_all(entities)?;
        if source.trim().is_empty() {
            return Err(SpecError::EmptySegment.into());
        }
        let mut seen: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
        let candidates: Vec<Candidate> = entities
            .iter()
            .zip(sentences)
            .map(|(entity, sentence)| {
                let count = seen.entry(entity.as_str()).or_insert(0);
                *count += 1;
                let label = match *count {
                    1 => entity.clone(),
                    k => format!("{entity} #{k}"),
                };
                Candidate::new(label, sentence, Origin::Generated)
            })
            .collect();
        self.score(source, &candidates).await
    }
}

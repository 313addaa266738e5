//! Binary sentence-consistency scoring.
//!
//! Two bindings exist: an entity-containment heuristic and a client for a
//! remote classification service speaking a small JSON protocol.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::normalize_surface;
use crate::error::ScorerError;

/// Binary consistency label; `Consistent` is reported as 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConsistencyVerdict {
    Inconsistent,
    Consistent,
}

impl ConsistencyVerdict {
    pub fn label(self) -> u8 {
        match self {
            ConsistencyVerdict::Inconsistent => 0,
            ConsistencyVerdict::Consistent => 1,
        }
    }

    pub fn from_label(label: u8) -> Option<Self> {
        match label {
            0 => Some(ConsistencyVerdict::Inconsistent),
            1 => Some(ConsistencyVerdict::Consistent),
            _ => None,
        }
    }
}

/// A text passage together with the surfaces of the entities it mentions.
#[derive(Debug, Clone, Default)]
pub struct Passage<'a> {
    pub text: std::borrow::Cow<'a, str>,
    pub entities: Vec<&'a str>,
}

pub trait ConsistencyScorer: Send + Sync {
    fn score(&self, claim: &Passage<'_>, context: &Passage<'_>) -> Result<ConsistencyVerdict, ScorerError>;
}

/// Consistent iff every claim entity appears among the context entities
/// (case-folded, whitespace-collapsed). Claims without entities are consistent.
#[derive(Debug, Clone, Copy, Default)]
pub struct EntityContainmentScorer;

impl ConsistencyScorer for EntityContainmentScorer {
    fn score(&self, claim: &Passage<'_>, context: &Passage<'_>) -> Result<ConsistencyVerdict, ScorerError> {
        let known: HashSet<String> = context.entities.iter().map(|s| normalize_surface(s)).collect();
        let all_known = claim
            .entities
            .iter()
            .all(|s| known.contains(&normalize_surface(s)));
        Ok(if all_known {
            ConsistencyVerdict::Consistent
        } else {
            ConsistencyVerdict::Inconsistent
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScorerBinding {
    #[default]
    #[serde(alias = "heuristic")]
    HeuristicEntityContainment,
    Remote {
        endpoint: String,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
        #[serde(default = "default_max_concurrent")]
        max_concurrent: usize,
    },
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_max_concurrent() -> usize {
    4
}

impl ScorerBinding {
    pub fn validate(&self) -> Result<(), ScorerError> {
        if let ScorerBinding::Remote {
            endpoint,
            timeout_ms,
            max_concurrent,
        } = self
        {
            if !(endpoint.starts_with("http://") || endpoint.starts_with("https://")) {
                return Err(ScorerError::Config(format!("endpoint {endpoint:?} is not an http(s) URL")));
            }
            if *timeout_ms == 0 {
                return Err(ScorerError::Config("timeout must be > 0".into()));
            }
            if *max_concurrent == 0 {
                return Err(ScorerError::Config("max_concurrent must be >= 1".into()));
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Arc<dyn ConsistencyScorer>, ScorerError> {
        self.validate()?;
        Ok(match self {
            ScorerBinding::HeuristicEntityContainment => Arc::new(EntityContainmentScorer),
            ScorerBinding::Remote {
                endpoint,
                timeout_ms,
                max_concurrent,
            } => Arc::new(RemoteScorer::new(
                endpoint,
                Duration::from_millis(*timeout_ms),
                *max_concurrent,
            )),
        })
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    claim: &'a str,
    context: &'a str,
}

#[derive(Deserialize)]
struct ScoreResponse {
    label: Option<serde_json::Value>,
}

/// Counting semaphore bounding in-flight requests.
struct Permits {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Permits {
    fn acquire(&self) -> PermitGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        PermitGuard(self)
    }
}

struct PermitGuard<'a>(&'a Permits);

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Client for `POST <endpoint>/score`.
pub struct RemoteScorer {
    url: String,
    agent: ureq::Agent,
    permits: Permits,
}

impl RemoteScorer {
    pub fn new(endpoint: &str, timeout: Duration, max_concurrent: usize) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteScorer {
            url: format!("{}/score", endpoint.trim_end_matches('/')),
            agent,
            permits: Permits {
                free: Mutex::new(max_concurrent.max(1)),
                cv: Condvar::new(),
            },
        }
    }
}

impl ConsistencyScorer for RemoteScorer {
    fn score(&self, claim: &Passage<'_>, context: &Passage<'_>) -> Result<ConsistencyVerdict, ScorerError> {
        let _permit = self.permits.acquire();
        let body = ScoreRequest {
            claim: &claim.text,
            context: &context.text,
        };
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(&body)
            .map_err(|e| ScorerError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if status != 200 {
            return Err(ScorerError::Protocol(format!("HTTP status {status}")));
        }
        let parsed: ScoreResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| match e {
                ureq::Error::Io(io) => ScorerError::Transport(io.to_string()),
                ureq::Error::Timeout(t) => ScorerError::Transport(format!("timeout: {t}")),
                other => ScorerError::Protocol(other.to_string()),
            })?;
        parsed
            .label
            .as_ref()
            .and_then(serde_json::Value::as_u64)
            .and_then(|l| u8::try_from(l).ok())
            .and_then(ConsistencyVerdict::from_label)
            .ok_or_else(|| ScorerError::Protocol("response lacks a 0/1 `label`".into()))
    }
}

/// Verdicts memoized per `(doc_id, sentence index)` within one run.
#[derive(Default)]
pub struct VerdictCache {
    entries: Mutex<HashMap<(String, usize), ConsistencyVerdict>>,
    hits: AtomicU64,
}

impl VerdictCache {
    pub fn get_or_try_insert(
        &self,
        doc_id: &str,
        sentence: usize,
        compute: impl FnOnce() -> Result<ConsistencyVerdict, ScorerError>,
    ) -> Result<ConsistencyVerdict, ScorerError> {
        let key = (doc_id.to_string(), sentence);
        if let Some(v) = self.lock().get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(*v);
        }
        let verdict = compute()?;
        self.lock().insert(key, verdict);
        Ok(verdict)
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, HashMap<(String, usize), ConsistencyVerdict>> {
        self.entries.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn passage<'a>(text: &'a str, entities: &[&'a str]) -> Passage<'a> {
        Passage {
            text: text.into(),
            entities: entities.to_vec(),
        }
    }

    #[test]
    fn containment_holds() {
        let v = EntityContainmentScorer
            .score(
                &passage("A fire broke out in Seattle.", &["Seattle"]),
                &passage("Firefighters in Seattle said ...", &["Seattle"]),
            )
            .unwrap();
        assert_eq!(v.label(), 1);
    }

    #[test]
    fn unseen_entity_is_inconsistent() {
        let v = EntityContainmentScorer
            .score(
                &passage("A fire broke out in Denver.", &["Denver"]),
                &passage("...", &["Seattle", "Seattle"]),
            )
            .unwrap();
        assert_eq!(v.label(), 0);
    }

    #[test]
    fn entityless_claim_is_consistent() {
        let v = EntityContainmentScorer
            .score(&passage("It rained.", &[]), &passage("", &[]))
            .unwrap();
        assert_eq!(v, ConsistencyVerdict::Consistent);
    }

    #[test]
    fn matching_is_case_and_space_insensitive() {
        let v = EntityContainmentScorer
            .score(&passage("x", &["new  YORK"]), &passage("y", &["New York"]))
            .unwrap();
        assert_eq!(v.label(), 1);
    }

    #[test]
    fn binding_validation() {
        assert!(ScorerBinding::default().validate().is_ok());
        let bad = ScorerBinding::Remote {
            endpoint: "http://localhost:1".into(),
            timeout_ms: 0,
            max_concurrent: 1,
        };
        assert!(matches!(bad.validate(), Err(ScorerError::Config(_))));
        let bad = ScorerBinding::Remote {
            endpoint: "http://localhost:1".into(),
            timeout_ms: 10,
            max_concurrent: 0,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn binding_json_shape() {
        let b: ScorerBinding = serde_json::from_str(r#"{"kind":"heuristic"}"#).unwrap();
        assert_eq!(b, ScorerBinding::HeuristicEntityContainment);
        let b: ScorerBinding =
            serde_json::from_str(r#"{"kind":"remote","endpoint":"http://h:1","max_concurrent":2}"#).unwrap();
        assert!(matches!(b, ScorerBinding::Remote { timeout_ms: 30_000, max_concurrent: 2, .. }));
    }

    #[test]
    fn cache_counts_hits() {
        let cache = VerdictCache::default();
        let mut calls = 0;
        for _ in 0..3 {
            cache
                .get_or_try_insert("d", 0, || {
                    calls += 1;
                    Ok(ConsistencyVerdict::Consistent)
                })
                .unwrap();
        }
        assert_eq!(calls, 1);
        assert_eq!(cache.hits(), 2);
    }
}

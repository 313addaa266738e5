//! Mask-token insertion for downstream inputs and the mask-position sweep.

use serde::{Deserialize, Serialize};

use crate::corpus::AnnotatedDocument;
use crate::error::ConnectorError;
use crate::gsg::{validate_mask_token, DEFAULT_MASK_TOKEN};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConnectorConfig {
    pub mask_token: String,
    /// 1-based sentence index the mask is inserted in front of.
    pub position: usize,
}

impl Default for ConnectorConfig {
    fn default() -> Self {
        ConnectorConfig {
            mask_token: DEFAULT_MASK_TOKEN.to_string(),
            position: 1,
        }
    }
}

impl ConnectorConfig {
    pub fn validate(&self) -> Result<(), ConnectorError> {
        validate_mask_token(&self.mask_token).map_err(ConnectorError::Config)?;
        if self.position == 0 {
            return Err(ConnectorError::Config("position must be at least 1".into()));
        }
        Ok(())
    }
}

/// Splices `mask_token` plus one space in front of sentence `position`.
pub fn insert_mask(doc: &AnnotatedDocument, config: &ConnectorConfig) -> Result<String, ConnectorError> {
    validate_mask_token(&config.mask_token).map_err(ConnectorError::Config)?;
    let sentences = doc.sentences.len();
    if config.position == 0 || config.position > sentences {
        return Err(ConnectorError::PositionOutOfRange {
            position: config.position,
            sentences,
        });
    }
    if doc.text.contains(&config.mask_token) {
        return Err(ConnectorError::MaskPresent(config.mask_token.clone()));
    }
    let at = doc.sentences[config.position - 1].char_start;
    let mut out = String::with_capacity(doc.text.len() + config.mask_token.len() + 1);
    out.push_str(&doc.text[..at]);
    out.push_str(&config.mask_token);
    out.push(' ');
    out.push_str(&doc.text[at..]);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub position: usize,
    /// Callback score, or the reason this position could not be evaluated.
    pub score: Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub best_position: usize,
    pub best_score: f64,
    pub table: Vec<SweepRow>,
}

/// Masks every sample document at each candidate position and keeps the
/// position the callback scores highest (ties go to the smaller position).
///
/// A position fails when any sample document rejects it or the callback
/// errors; failures are recorded in the table and the sweep moves on.
pub fn sweep_positions<F, E>(
    sample: &[AnnotatedDocument],
    positions: &[usize],
    mask_token: &str,
    mut evaluate: F,
) -> Result<SweepOutcome, ConnectorError>
where
    F: FnMut(usize, &[String]) -> Result<f64, E>,
    E: std::fmt::Display,
{
    let mut table = Vec::with_capacity(positions.len());
    let mut best: Option<(usize, f64)> = None;
    for &position in positions {
        let config = ConnectorConfig {
            mask_token: mask_token.to_string(),
            position,
        };
        let masked: Result<Vec<String>, ConnectorError> = sample.iter().map(|d| insert_mask(d, &config)).collect();
        let score = masked
            .map_err(|e| e.to_string())
            .and_then(|m| evaluate(position, &m).map_err(|e| e.to_string()))
            .and_then(|s| if s.is_nan() { Err("callback returned NaN".to_string()) } else { Ok(s) });
        if let Ok(s) = score {
            let better = match best {
                None => true,
                Some((bp, bs)) => s > bs || (s == bs && position < bp),
            };
            if better {
                best = Some((position, s));
            }
        }
        table.push(SweepRow { position, score });
    }
    let (best_position, best_score) = best.ok_or(ConnectorError::AllPositionsFailed)?;
    Ok(SweepOutcome {
        best_position,
        best_score,
        table,
    })
}

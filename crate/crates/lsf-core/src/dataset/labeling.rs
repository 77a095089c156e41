//! Window labeling rules.
//!
//! Arrhythmia task: beats inside the window are grouped by the standard
//! annotation-class table (N, S, V, F, Q). All-N windows are negative, any
//! S/V/F makes the window positive, any Q (or a window with no beats at all)
//! is noisy.
//!
//! Atrial-fibrillation task: rhythm-change annotations define a
//! piecewise-constant rhythm over time; the rhythm holding a strict majority
//! of the window's duration decides the label. Windows whose duration is
//! dominated by noise or by undefined rhythm are noisy.

use super::ClassTag;
use crate::wfdb::{AnnotationEvent, RHYTHM_CHANGE};

/// Heartbeat superclasses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AamiClass {
    Normal,
    Supraventricular,
    Ventricular,
    Fusion,
    Unclassifiable,
}

/// Superclass of a beat annotation code, or `None` for non-beat annotations.
pub fn aami_class(code: u8) -> Option<AamiClass> {
    use AamiClass::*;
    let class = match code {
        1 | 2 | 3 | 11 | 34 => Normal,        // N, L, R, j, e
        4 | 7 | 8 | 9 => Supraventricular,    // a, J, A, S
        5 | 10 => Ventricular,                // V, E
        6 => Fusion,                          // F
        12 | 13 | 38 => Unclassifiable,       // paced, Q, fusion of paced and normal
        _ => return None,
    };
    Some(class)
}

/// True when the code denotes a classified heartbeat.
pub fn is_beat_code(code: u8) -> bool {
    aami_class(code).is_some()
}

/// Label one window of the arrhythmia task given the record's sorted
/// annotations.
pub fn label_arrhythmia(start: u64, end: u64, annotations: &[AnnotationEvent]) -> ClassTag {
    let mut any_beat = false;
    let mut any_abnormal = false;
    for ev in annotations {
        if ev.sample_index < start {
            continue;
        }
        if ev.sample_index >= end {
            break;
        }
        match aami_class(ev.code) {
            Some(AamiClass::Unclassifiable) => return ClassTag::Noisy,
            Some(AamiClass::Normal) => any_beat = true,
            Some(_) => {
                any_beat = true;
                any_abnormal = true;
            }
            None => {}
        }
    }
    if !any_beat {
        // Ten seconds of human ECG without a single classified beat means
        // signal loss.
        ClassTag::Noisy
    } else if any_abnormal {
        ClassTag::Positive
    } else {
        ClassTag::Negative
    }
}

/// Rhythm classes carried by rhythm-change aux strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhythmKind {
    AtrialFibrillation,
    Other,
    Noise,
}

/// Classify a rhythm aux string such as `(AFIB` or `(N`.
pub fn rhythm_kind(aux: &str) -> RhythmKind {
    let trimmed = aux.trim_start_matches('(');
    if trimmed.starts_with("AFIB") {
        RhythmKind::AtrialFibrillation
    } else if trimmed.starts_with("NOISE") {
        RhythmKind::Noise
    } else {
        RhythmKind::Other
    }
}

/// Label one window of the atrial-fibrillation task. The rhythm in force at
/// each instant comes from the most recent rhythm-change annotation; time
/// before the first rhythm annotation has no rhythm.
pub fn label_afib(start: u64, end: u64, annotations: &[AnnotationEvent]) -> ClassTag {
    debug_assert!(end > start);
    let mut afib: u64 = 0;
    let mut other: u64 = 0;
    // Rhythm at window start.
    let mut current: Option<RhythmKind> = None;
    for ev in annotations {
        if ev.sample_index >= start {
            break;
        }
        if ev.code == RHYTHM_CHANGE {
            if let Some(aux) = &ev.aux {
                current = Some(rhythm_kind(aux));
            }
        }
    }
    let mut cursor = start;
    for ev in annotations {
        if ev.sample_index < start {
            continue;
        }
        if ev.sample_index >= end {
            break;
        }
        if ev.code != RHYTHM_CHANGE {
            continue;
        }
        if let Some(aux) = &ev.aux {
            let span = ev.sample_index - cursor;
            match current {
                Some(RhythmKind::AtrialFibrillation) => afib += span,
                Some(RhythmKind::Other) => other += span,
                Some(RhythmKind::Noise) | None => {}
            }
            cursor = ev.sample_index;
            current = Some(rhythm_kind(aux));
        }
    }
    let span = end - cursor;
    match current {
        Some(RhythmKind::AtrialFibrillation) => afib += span,
        Some(RhythmKind::Other) => other += span,
        Some(RhythmKind::Noise) | None => {}
    }

    let window = end - start;
    if 2 * afib > window {
        ClassTag::Positive
    } else if 2 * other > window {
        ClassTag::Negative
    } else {
        ClassTag::Noisy
    }
}

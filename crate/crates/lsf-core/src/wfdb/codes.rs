//! Published annotation code table: numeric type code to mnemonic symbol.

/// Highest assigned annotation code.
pub const ANN_CODE_MAX: u8 = 49;

/// Rhythm-change annotation ('+'); its aux string names the new rhythm.
pub const RHYTHM_CHANGE: u8 = 28;

/// Mnemonic for a numeric annotation code, if assigned.
pub fn mnemonic(code: u8) -> Option<&'static str> {
    let m = match code {
        1 => "N",   // normal beat
        2 => "L",   // left bundle branch block beat
        3 => "R",   // right bundle branch block beat
        4 => "a",   // aberrated atrial premature beat
        5 => "V",   // premature ventricular contraction
        6 => "F",   // fusion of ventricular and normal beat
        7 => "J",   // nodal (junctional) premature beat
        8 => "A",   // atrial premature beat
        9 => "S",   // supraventricular premature or ectopic beat
        10 => "E",  // ventricular escape beat
        11 => "j",  // nodal (junctional) escape beat
        12 => "/",  // paced beat
        13 => "Q",  // unclassifiable beat
        14 => "~",  // signal quality change
        16 => "|",  // isolated QRS-like artifact
        18 => "s",  // ST segment change
        19 => "T",  // T-wave change
        20 => "*",  // systole
        21 => "D",  // diastole
        22 => "\"", // comment annotation
        23 => "=",  // measurement annotation
        24 => "p",  // P-wave peak
        25 => "B",  // bundle branch block beat (unspecified)
        26 => "^",  // non-conducted pacer spike
        27 => "t",  // T-wave peak
        28 => "+",  // rhythm change
        29 => "u",  // U-wave peak
        30 => "?",  // learning
        31 => "!",  // ventricular flutter wave
        32 => "[",  // start of ventricular flutter/fibrillation
        33 => "]",  // end of ventricular flutter/fibrillation
        34 => "e",  // atrial escape beat
        35 => "n",  // supraventricular escape beat
        36 => "@",  // link to external data
        37 => "x",  // non-conducted P-wave
        38 => "f",  // fusion of paced and normal beat
        39 => "(",  // waveform onset
        40 => ")",  // waveform end
        41 => "r",  // R-on-T premature ventricular contraction
        _ => return None,
    };
    Some(m)
}

/// Inverse lookup used by the interchange reader and synthetic generators.
pub fn code_for_mnemonic(sym: &str) -> Option<u8> {
    (1..=ANN_CODE_MAX).find(|&c| mnemonic(c) == Some(sym))
}

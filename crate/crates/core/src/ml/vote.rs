use crate::data::Label;
use crate::error::{Error, Result};

/// Majority label; ties go to the positive class.
pub fn majority_vote(labels: &[Label]) -> Result<Label> {
    if labels.is_empty() {
        return Err(Error::input("cannot vote over an empty sequence"));
    }
    let ones = labels.iter().filter(|&&l| l == 1).count();
    Ok(u8::from(2 * ones >= labels.len()))
}

/// Majority over every length-`window` run of frames `[i, i + window)`.
pub fn sliding_window_vote(frame_labels: &[Label], window: usize) -> Result<Vec<Label>> {
    if frame_labels.is_empty() {
        return Err(Error::input("cannot vote over an empty sequence"));
    }
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::param(format!(
            "voting window {window} must be odd and positive"
        )));
    }
    if window > frame_labels.len() {
        return Err(Error::param(format!(
            "voting window {window} exceeds sequence length {}",
            frame_labels.len()
        )));
    }
    frame_labels.windows(window).map(majority_vote).collect()
}

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::reasoning::StateLabel;

/// Self-reported ratings and the quadrant they discretize to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtLabel {
    pub valence_raw: u8,
    pub arousal_raw: u8,
    /// `None` for neutral trials (either rating equal to 3).
    pub label: Option<StateLabel>,
}

impl GtLabel {
    pub fn is_neutral(&self) -> bool {
        self.label.is_none()
    }
}

/// Median split of 1–5 ratings at 3; a 3 on either axis is neutral.
pub fn construct_label(valence: i64, arousal: i64) -> Result<GtLabel, EvalError> {
    for r in [valence, arousal] {
        if !(1..=5).contains(&r) {
            return Err(EvalError::OutOfRange(r));
        }
    }
    let label = (valence != 3 && arousal != 3).then(|| StateLabel::from_dims(valence > 3, arousal > 3));
    Ok(GtLabel {
        valence_raw: valence as u8,
        arousal_raw: arousal as u8,
        label,
    })
}

/// Quadrant coordinates: valence and arousal in {+1, −1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AffectPoint {
    pub v: i8,
    pub a: i8,
}

impl AffectPoint {
    pub fn of(label: StateLabel) -> Option<Self> {
        let sign = |b: bool| if b { 1 } else { -1 };
        Some(Self {
            v: sign(label.high_valence()?),
            a: sign(label.high_arousal()?),
        })
    }

    pub fn distance(self, other: Self) -> f64 {
        let dv = f64::from(self.v - other.v);
        let da = f64::from(self.a - other.a);
        (dv * dv + da * da).sqrt()
    }
}

/// Renders a ground-truth label for CSV output.
pub fn gt_str(label: Option<StateLabel>) -> &'static str {
    label.map_or("neutral", StateLabel::as_str)
}

pub fn parse_gt(s: &str) -> Result<Option<StateLabel>, EvalError> {
    if s.trim().eq_ignore_ascii_case("neutral") {
        return Ok(None);
    }
    match s.parse::<StateLabel>() {
        Ok(StateLabel::Unknown) | Err(_) => Err(EvalError::BadLabel(s.to_string())),
        Ok(l) => Ok(Some(l)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_split() {
        assert_eq!(construct_label(4, 2).unwrap().label, Some(StateLabel::Hvla));
        assert!(construct_label(3, 5).unwrap().is_neutral());
        assert!(construct_label(5, 3).unwrap().is_neutral());
        assert_eq!(construct_label(5, 5).unwrap().label, Some(StateLabel::Hvha));
        assert_eq!(construct_label(1, 1).unwrap().label, Some(StateLabel::Lvla));
        assert_eq!(construct_label(0, 2), Err(EvalError::OutOfRange(0)));
        assert_eq!(construct_label(2, 6), Err(EvalError::OutOfRange(6)));
    }

    #[test]
    fn distances() {
        let p = |l| AffectPoint::of(l).unwrap();
        assert_eq!(p(StateLabel::Hvha).distance(p(StateLabel::Hvha)), 0.0);
        assert_eq!(p(StateLabel::Hvha).distance(p(StateLabel::Lvla)), 8f64.sqrt());
        assert_eq!(p(StateLabel::Hvha).distance(p(StateLabel::Hvla)), 2.0);
        assert!(AffectPoint::of(StateLabel::Unknown).is_none());
    }

    #[test]
    fn gt_strings() {
        assert_eq!(parse_gt("neutral").unwrap(), None);
        assert_eq!(parse_gt("lvha").unwrap(), Some(StateLabel::Lvha));
        assert!(parse_gt("Unknown").is_err());
        assert_eq!(gt_str(None), "neutral");
    }
}

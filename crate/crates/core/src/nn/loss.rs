use crate::nn::tape::{Tape, Var};

/// Squared-distance contrastive loss between two projections.
///
/// Same label: `|y1 - y2|^2`. Different labels: `max(0, m - |y1 - y2|^2)`.
pub fn contrastive_loss(tape: &mut Tape<'_>, y1: Var, y2: Var, same_label: bool, margin: f64) -> Var {
    let diff = tape.sub(y1, y2);
    let sq = tape.square(diff);
    let d2 = tape.sum(sq);
    if same_label {
        d2
    } else {
        let neg = tape.scale(d2, -1.0);
        let gap = tape.add_scalar(neg, margin);
        tape.relu(gap)
    }
}

/// Plain-value counterpart of [`contrastive_loss`].
pub fn contrastive_value(y1: &[f64], y2: &[f64], same_label: bool, margin: f64) -> f64 {
    let d2: f64 = y1.iter().zip(y2).map(|(a, b)| (a - b) * (a - b)).sum();
    if same_label {
        d2
    } else {
        (margin - d2).max(0.0)
    }
}

/// Mean of squared differences over every entry.
pub fn mse(tape: &mut Tape<'_>, a: Var, b: Var) -> Var {
    let diff = tape.sub(a, b);
    let sq = tape.square(diff);
    tape.mean(sq)
}

pub fn mse_value(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / a.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{ParamSet, Tensor2};

    #[test]
    fn closed_forms() {
        let v = [1.0, -2.0, 0.5];
        assert_eq!(contrastive_value(&v, &v, true, 15.0), 0.0);
        assert_eq!(contrastive_value(&v, &v, false, 15.0), 15.0);
        assert_eq!(mse_value(&[0.0, 0.0], &[2.0, 0.0]), 2.0);
    }

    #[test]
    fn clamped_branch_has_zero_gradient() {
        let p = ParamSet::new();
        let mut t = Tape::new(&p);
        let a = t.input(Tensor2::row_vector(&[4.0, 2.0]));
        let b = t.input(Tensor2::row_vector(&[0.0, 0.0]));
        let l = contrastive_loss(&mut t, a, b, false, 15.0);
        assert_eq!(t.value(l).item(), 0.0);
        let g = t.backward(l);
        assert!(g.wrt(a).unwrap().data().iter().all(|v| *v == 0.0));
    }
}

//! Finite-difference utilities for gradient verification.

use crate::{ParamId, ParamStore, Scalar};

/// Central-difference derivative of `f` w.r.t. one element of one parameter.
/// `f` must be a pure function of the store (no mutation it doesn't undo).
pub fn central_difference<F: Scalar>(
    store: &mut ParamStore<F>,
    id: ParamId,
    flat_index: usize,
    h: F,
    mut f: impl FnMut(&ParamStore<F>) -> F,
) -> F {
    let original = store.value(id).as_slice().expect("standard layout")[flat_index];
    set_flat(store, id, flat_index, original + h);
    let up = f(store);
    set_flat(store, id, flat_index, original - h);
    let down = f(store);
    set_flat(store, id, flat_index, original);
    (up - down) / (F::lit(2.0) * h)
}

fn set_flat<F: Scalar>(store: &mut ParamStore<F>, id: ParamId, flat_index: usize, v: F) {
    store
        .value_mut(id)
        .as_slice_mut()
        .expect("standard layout")[flat_index] = v;
}

/// Relative error with an absolute floor: values whose magnitudes both fall
/// below `floor` compare as equal (finite differences of a flat region are
/// pure rounding noise).
pub fn relative_error<F: Scalar>(analytic: F, numeric: F, floor: F) -> F {
    let a = analytic.abs();
    let b = numeric.abs();
    if a < floor && b < floor {
        return F::zero();
    }
    (analytic - numeric).abs() / a.max(b)
}

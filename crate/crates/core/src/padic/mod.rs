//! Truncated arithmetic in `Q_p` and its quadratic extensions.

mod additive;
mod elem;
mod ext;

pub use additive::{
    additive_eval, conductor_by_scan, multiplier, psi0_conductor, psi0_eval, psi_frac, psi_k_eval,
    AdditiveCharValue, AdditiveKind, TraceForm,
};
pub use elem::{inv_mod, precision_cap, KElem, Ring};
pub use ext::{
    catalog_tags, is_prime, least_nonresidue, make_extension, Conventions, ExtKind, PrimeField,
    QuadExt,
};

/// `(conj, trace, norm)` of an element.
pub fn galois_data(x: &KElem) -> (KElem, KElem, KElem) {
    (x.conj(), x.trace(), x.norm())
}

//! Shared fixtures for the benchmarks.

use ks_core::initial::{interpolate_pair, nonblowup_data};
use ks_core::{build_macro_mesh, FeFunction, MacroKind, Mesh};

/// Acute mesh with the `C0 = 70` non-blowup data interpolated on it.
pub fn fixture(nsquare: usize) -> (Mesh, FeFunction, FeFunction) {
    let mesh = build_macro_mesh(nsquare, MacroKind::Acute);
    let (u0, v0) = interpolate_pair(&mesh, nonblowup_data(70.0)).expect("finite data");
    (mesh, u0, v0)
}

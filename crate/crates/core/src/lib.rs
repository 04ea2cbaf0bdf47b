//! Robust sidelobe response control and synthesis for sensor arrays whose
//! steering vectors carry norm-bounded uncertainty.
//!
//! A single sidelobe point is controlled by orthogonally decomposing the
//! previous weight against `a(theta_k)` and choosing the complex combining
//! coefficient so that the worst-case upper boundary `V_u(theta_k)` lands
//! exactly on the desired level. Repeating this at the worst violating
//! sidelobe peak yields an iterative synthesis procedure.

pub mod c2word;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod mc;
pub mod response;
pub mod robust_control;
pub mod synthesis;
pub mod uncertainty;

pub use error::{Error, Result};
pub use geometry::{AngleGrid, ArrayGeometry, WeightVector};
pub use num_complex::Complex64;

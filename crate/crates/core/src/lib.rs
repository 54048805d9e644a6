pub mod expr;
pub mod grassmann;
pub mod hj;
pub mod model;
pub mod oracle;
pub mod phase_space;
pub mod quad;
pub mod scenario;

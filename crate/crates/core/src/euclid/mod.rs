pub mod hull;
pub mod kirszbraun;
pub mod slack;
pub mod solver;
pub mod transport;

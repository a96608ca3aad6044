pub mod compare;
pub mod diag;
pub mod render;
pub mod run;

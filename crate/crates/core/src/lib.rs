pub mod case_io;
pub mod lp;
pub mod milp;
pub mod mplp;
pub mod multi_area;
pub mod screening;
pub mod uc_models;
pub mod validation;

pub mod cptp;
pub mod local_search;
pub mod maxent;
pub mod sdp;

pub use cptp::cptp_linear_minimize;
pub use local_search::{local_search_minimize, LocalSearch, RestartCenter, SearchResult};
pub use maxent::{maxent_solve, maxent_solve_from, MaxEntOptions, MaxEntProblem, MaxEntSolution};
pub use sdp::{sdp_solve, SdpConstraint, SdpOptions, SdpProblem, SdpSolution};

//! Antenna schedules, resource blocks and the link set-up protocol.

pub mod ook;
pub mod protocol;
pub mod rb;
pub mod schedule;

pub use ook::{ook_detect, ook_encode};
pub use protocol::{run_protocol, PassiveLink, ProtocolError, ProtocolState, Stage, World};
pub use rb::{first_fit, RbAllocation};
pub use schedule::{generate_schedule, LatinSchedule, ScheduleError, ScheduleMode};

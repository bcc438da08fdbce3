//! Task stream sources: synthetic generation and alarm-log ingestion.

mod alarms;
mod csv_io;
mod synthetic;

pub use alarms::{
    input_codes, machines_to_stream, time_split, window_alarm_log, AlarmLogRecord, MachineWindows, WindowSample,
    WindowSpec,
};
pub use csv_io::{
    load_alarm_log, load_samples, read_alarm_log, read_samples, save_alarm_log, save_samples, stream_from_samples,
    write_alarm_log, write_samples,
};
pub use synthetic::{generate_stream, StreamConfig, HIGH_FREQ_LABELS, LOW_FREQ_LABELS, MEDIUM_FREQ_LABELS};

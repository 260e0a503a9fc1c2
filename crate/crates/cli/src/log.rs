//! Stderr logging controlled by the `DPASR_LOG` environment variable:
//! `off`, `error`, `warn`, `info` (default), or `debug`.

use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Off,
    Error,
    Warn,
    Info,
    Debug,
}

static LEVEL: OnceLock<Level> = OnceLock::new();

pub fn level() -> Level {
    *LEVEL.get_or_init(|| match std::env::var("DPASR_LOG").as_deref() {
        Ok("off") | Ok("quiet") => Level::Off,
        Ok("error") => Level::Error,
        Ok("warn") => Level::Warn,
        Ok("debug") => Level::Debug,
        _ => Level::Info,
    })
}

pub fn enabled(at: Level) -> bool {
    at <= level()
}

macro_rules! log_at {
    ($level:expr, $tag:expr, $($arg:tt)*) => {
        if $crate::log::enabled($level) {
            eprintln!(concat!("[dpasr {}] ", "{}"), $tag, format_args!($($arg)*));
        }
    };
}

macro_rules! log_info {
    ($($arg:tt)*) => { log_at!($crate::log::Level::Info, "info", $($arg)*) };
}

macro_rules! log_warn {
    ($($arg:tt)*) => { log_at!($crate::log::Level::Warn, "warn", $($arg)*) };
}

macro_rules! log_debug {
    ($($arg:tt)*) => { log_at!($crate::log::Level::Debug, "debug", $($arg)*) };
}

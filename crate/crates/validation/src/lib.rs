//! Holds the `acceptance` test target. It runs as its own package so it
//! executes after the unit and integration suites of the other crates.

//! Hosts the `acceptance` test target, which checks the solver and the CLI
//! end to end against fixed criteria. There is no library code here.

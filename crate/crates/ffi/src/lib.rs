//! C ABI over `mpg-lab`.
//!
//! Games and parameters are opaque heap handles released with their `_free`
//! functions. Every fallible call returns an [`MpgStatus`]; on failure the
//! message is available from [`mpg_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mpg_lab::dynamics::{run_dynamics, Algorithm, DynamicsConfig, PolicyState};
use mpg_lab::environments::{coordination_game, CoordinationSpec};
use mpg_lab::eval::evaluate;
use mpg_lab::game::init_params;
use mpg_lab::metrics::{nash_gap, optimal_welfare, poa};
use mpg_lab::{MarkovGame, MpgError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MpgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    MissingPotential = 4,
    Numerical = 5,
    TooLarge = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MpgAlgorithm {
    Pg = 0,
    PgLogbarrier = 1,
    Npg = 2,
    NpgBr = 3,
    MaxGainBr = 4,
    NnPg = 5,
    NnAdam = 6,
}

impl From<MpgAlgorithm> for Algorithm {
    fn from(a: MpgAlgorithm) -> Self {
        match a {
            MpgAlgorithm::Pg => Algorithm::Pg,
            MpgAlgorithm::PgLogbarrier => Algorithm::PgLogbarrier,
            MpgAlgorithm::Npg => Algorithm::Npg,
            MpgAlgorithm::NpgBr => Algorithm::NpgBr,
            MpgAlgorithm::MaxGainBr => Algorithm::MaxGainBr,
            MpgAlgorithm::NnPg => Algorithm::NnPg,
            MpgAlgorithm::NnAdam => Algorithm::NnAdam,
        }
    }
}

/// Settings of [`mpg_run`]; start from [`mpg_run_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct MpgRunOptions {
    pub algorithm: MpgAlgorithm,
    pub eta: f64,
    pub lambda: f64,
    pub k: usize,
    pub iters: u64,
    pub seed: u64,
    pub epsilon: f64,
}

/// Opaque game handle.
pub struct MpgGame {
    game: MarkovGame,
}

/// Opaque policy-parameter handle (tabular logits or MLP weights).
pub struct MpgParams {
    state: PolicyState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs were replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(err: &MpgError) -> MpgStatus {
    match err {
        MpgError::MissingPotential => MpgStatus::MissingPotential,
        MpgError::TooLargeToEnumerate { .. } => MpgStatus::TooLarge,
        e if e.is_numerical() => MpgStatus::Numerical,
        _ => MpgStatus::InvalidArgument,
    }
}

enum Failure {
    Status(MpgStatus, String),
    Lib(MpgError),
}

impl From<MpgError> for Failure {
    fn from(e: MpgError) -> Self {
        Failure::Lib(e)
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(MpgStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `body`, converting errors and panics into a status and the thread's
/// last error.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> MpgStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => MpgStatus::Ok,
        Ok(Err(Failure::Status(status, message))) => {
            set_error(message);
            status
        }
        Ok(Err(Failure::Lib(err))) => {
            set_error(err.to_string());
            status_of(&err)
        }
        Err(_) => {
            set_error("internal panic".into());
            MpgStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure::Status(MpgStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn game_ref<'a>(game: *const MpgGame) -> Result<&'a MarkovGame, Failure> {
    game.as_ref().map(|g| &g.game).ok_or_else(|| null("game"))
}

unsafe fn params_ref<'a>(params: *const MpgParams, game: &MarkovGame) -> Result<&'a PolicyState, Failure> {
    let state = &params.as_ref().ok_or_else(|| null("params"))?.state;
    state.policy().check_dims(game)?;
    Ok(state)
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mpg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a game from its JSON description.
///
/// # Safety
/// `json` must be NULL or a NUL-terminated string; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn mpg_game_from_json(json: *const c_char, out: *mut *mut MpgGame) -> MpgStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let game = MarkovGame::from_json(text)?;
        write_out(out, Box::into_raw(Box::new(MpgGame { game })), "out")
    })
}

/// Builds the Coordination Game with `num_agents` agents.
///
/// # Safety
/// `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn mpg_game_coordination(
    num_agents: usize,
    eps_trans: f64,
    gamma: f64,
    out: *mut *mut MpgGame,
) -> MpgStatus {
    guard(|| {
        let game = coordination_game(&CoordinationSpec {
            num_agents,
            eps_trans,
            gamma,
        })?;
        write_out(out, Box::into_raw(Box::new(MpgGame { game })), "out")
    })
}

/// # Safety
/// `game` must be NULL or a handle from this library that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn mpg_game_free(game: *mut MpgGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// # Safety
/// `game` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpg_game_num_agents(game: *const MpgGame, out: *mut usize) -> MpgStatus {
    guard(|| write_out(out, game_ref(game)?.num_agents(), "out"))
}

/// # Safety
/// `game` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpg_game_num_states(game: *const MpgGame, out: *mut usize) -> MpgStatus {
    guard(|| write_out(out, game_ref(game)?.num_states(), "out"))
}

/// Seeded standard-normal softmax logits for `game`.
///
/// # Safety
/// `game` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpg_params_init(game: *const MpgGame, seed: u64, out: *mut *mut MpgParams) -> MpgStatus {
    guard(|| {
        let state = PolicyState::Tabular(init_params(seed, game_ref(game)?));
        write_out(out, Box::into_raw(Box::new(MpgParams { state })), "out")
    })
}

/// # Safety
/// `params` must be NULL or a handle from this library that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn mpg_params_free(params: *mut MpgParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Writes `pi^agent(.|state)` into `probs`, which must hold `len` doubles with
/// `len` equal to the agent's action count.
///
/// # Safety
/// Handles must be live; `probs` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mpg_params_policy_row(
    game: *const MpgGame,
    params: *const MpgParams,
    agent: usize,
    state: usize,
    probs: *mut f64,
    len: usize,
) -> MpgStatus {
    guard(|| {
        let game = game_ref(game)?;
        let policy = params_ref(params, game)?.policy();
        if agent >= game.num_agents() || state >= game.num_states() {
            return Err(Failure::Status(
                MpgStatus::InvalidArgument,
                format!("agent {agent} or state {state} out of range"),
            ));
        }
        let row = policy.row(agent, state);
        if len != row.len() {
            return Err(Failure::Status(
                MpgStatus::InvalidArgument,
                format!("buffer holds {len} entries, agent {agent} has {} actions", row.len()),
            ));
        }
        if probs.is_null() {
            return Err(null("probs"));
        }
        std::slice::from_raw_parts_mut(probs, len).copy_from_slice(row);
        Ok(())
    })
}

/// Potential value `Phi(mu)` of the policy.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpg_phi_mu(game: *const MpgGame, params: *const MpgParams, out: *mut f64) -> MpgStatus {
    guard(|| {
        let game = game_ref(game)?;
        let eval = evaluate(game, &params_ref(params, game)?.policy())?;
        write_out(out, eval.phi_mu.ok_or(MpgError::MissingPotential)?, "out")
    })
}

/// Largest unilateral improvement over agents.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpg_nash_gap(game: *const MpgGame, params: *const MpgParams, out: *mut f64) -> MpgStatus {
    guard(|| {
        let game = game_ref(game)?;
        write_out(out, nash_gap(game, &params_ref(params, game)?.policy())?, "out")
    })
}

/// Welfare of the policy divided by the optimal product-policy welfare.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mpg_poa(game: *const MpgGame, params: *const MpgParams, out: *mut f64) -> MpgStatus {
    guard(|| {
        let game = game_ref(game)?;
        let policy = params_ref(params, game)?.policy();
        let optimum = optimal_welfare(game)?;
        write_out(out, poa(game, &policy, &optimum)?, "out")
    })
}

#[no_mangle]
pub extern "C" fn mpg_run_options_default() -> MpgRunOptions {
    let d = DynamicsConfig::default();
    MpgRunOptions {
        algorithm: MpgAlgorithm::Pg,
        eta: d.eta,
        lambda: d.lambda,
        k: d.k,
        iters: d.max_iters,
        seed: d.seed,
        epsilon: d.epsilon,
    }
}

/// Runs a dynamic from its seeded initial parameters. The final parameters
/// are stored in `out_params` and the final Nash-gap in `out_nash_gap`; either
/// may be NULL when not needed.
///
/// # Safety
/// `game` must be a live handle, `options` must point to valid options, and
/// the outputs must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn mpg_run(
    game: *const MpgGame,
    options: *const MpgRunOptions,
    out_params: *mut *mut MpgParams,
    out_nash_gap: *mut f64,
) -> MpgStatus {
    guard(|| {
        let game = game_ref(game)?;
        let options = options.as_ref().ok_or_else(|| null("options"))?;
        let config = DynamicsConfig {
            eta: options.eta,
            lambda: options.lambda,
            k: options.k,
            max_iters: options.iters,
            seed: options.seed,
            epsilon: options.epsilon,
            ..DynamicsConfig::new(options.algorithm.into())
        };
        let record = run_dynamics(game, &config)?;
        if !out_nash_gap.is_null() {
            let last = record.rows.last().expect("a run records at least its initial row");
            out_nash_gap.write(last.nash_gap);
        }
        if !out_params.is_null() {
            out_params.write(Box::into_raw(Box::new(MpgParams {
                state: record.final_params,
            })));
        }
        Ok(())
    })
}

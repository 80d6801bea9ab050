#
# Licensed under the Apache License, Version 2.0 (the "License"); you may
# not use this file except in compliance with the License.  You may obtain
# a copy of the License at
#
#   http://www.apache.org/licenses/LICENSE-2.0
#
import sys
import logging

DEBUG_ENABLED = False
TRACEBACK_ENABLED = True

DISPLAY_LEVEL = 70

_display_logger = logging.getLogger('crosslab.display')
_debug_logger = logging.getLogger('crosslab.debug')


def display(msg: str, log_only: bool = False) -> None:
    if not log_only:
        _display_logger.log(DISPLAY_LEVEL, msg)
    _debug_logger.log(10, msg)


def debug(msg) -> None:
    if DEBUG_ENABLED:
        if isinstance(msg, Exception):
            if TRACEBACK_ENABLED:
                _debug_logger.exception(msg)
        display(str(msg))


def set_logfile(filename: str) -> None:
    handlers = [h.get_name() for h in _debug_logger.handlers]
    if 'logfile' not in handlers:
        logfile_handler = logging.FileHandler(filename)
        logfile_handler.set_name('logfile')
        formatter = logging.Formatter('%(asctime)s: %(message)s')
        logfile_handler.setFormatter(formatter)
        _debug_logger.addHandler(logfile_handler)


def _toggle(value: str) -> bool:
    if value.lower() not in ('enable', 'disable'):
        raise ValueError(f"value must be one of `enable` or `disable`, got {value}")
    return value.lower() == 'enable'


def set_debug(value: str) -> None:
    global DEBUG_ENABLED
    DEBUG_ENABLED = _toggle(value)


def set_traceback(value: str) -> None:
    global TRACEBACK_ENABLED
    TRACEBACK_ENABLED = _toggle(value)


def configure() -> None:
    '''
    Configures the logging facility

    Display messages go to stdout; debug messages go nowhere until a
    logfile is set or debug output is enabled.  Library warnings from the
    ``crosslab`` logger go to stderr.

    :returns: None
    '''
    root_logger = logging.getLogger()
    root_logger.addHandler(logging.NullHandler())
    root_logger.setLevel(99)

    _display_logger.setLevel(DISPLAY_LEVEL)
    _debug_logger.setLevel(10)
    # both live under `crosslab`; keep them off its stderr handler
    _display_logger.propagate = False
    _debug_logger.propagate = False

    display_handlers = [h.get_name() for h in _display_logger.handlers]

    if 'stdout' not in display_handlers:
        stdout_handler = logging.StreamHandler(sys.stdout)
        stdout_handler.set_name('stdout')
        stdout_handler.setFormatter(logging.Formatter('%(message)s'))
        _display_logger.addHandler(stdout_handler)

    library_logger = logging.getLogger('crosslab')
    library_logger.setLevel(logging.WARNING)
    if 'stderr' not in [h.get_name() for h in library_logger.handlers]:
        stderr_handler = logging.StreamHandler(sys.stderr)
        stderr_handler.set_name('stderr')
        stderr_handler.setFormatter(logging.Formatter('%(levelname)s: %(message)s'))
        library_logger.addHandler(stderr_handler)

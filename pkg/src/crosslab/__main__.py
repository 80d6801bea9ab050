#
# Licensed under the Apache License, Version 2.0 (the "License"); you may
# not use this file except in compliance with the License.  You may obtain
# a copy of the License at
#
#   http://www.apache.org/licenses/LICENSE-2.0
#
from __future__ import annotations

import argparse
import logging
import os
import stat
import sys
import textwrap
import threading
import traceback

from uuid import uuid4

import daemon
from daemon.pidfile import TimeoutPIDLockFile

from crosslab import __version__, interface, output
from crosslab.config import load_config
from crosslab.exceptions import CheckpointNotFound, ConfigurationError, CrossLabException, InvalidInputError
from crosslab.pas.baselines import BASELINE_KINDS
from crosslab.terrain.tiles import Category

logger = logging.getLogger('crosslab')

# usage and configuration problems exit 1, runtime faults exit 2
USAGE_ERRORS = (ConfigurationError, InvalidInputError, CheckpointNotFound)
DETACHABLE = ('train-oracle', 'train-pas', 'train-baseline', 'train-terrain-estimator', 'ablate')

DEFAULT_CLI_ARGS = {
    "generic_args": (
        (
            ('--version',),
            {
                "action": "version",
                "version": __version__
            },
        ),
    ),
    "common_args": (
        (
            ('-c', '--config'),
            {
                "help": "YAML or JSON configuration file (default: all defaults)"
            },
        ),
        (
            ('--seed',),
            {
                "type": int,
                "help": "master seed every random substream derives from"
            },
        ),
        (
            ('--threads',),
            {
                "type": int,
                "help": "worker threads for the environments; 1 is the bit-exact reference mode"
            },
        ),
        (
            ('--reference-mode',),
            {
                "action": "store_const",
                "const": True,
                "dest": "reference_mode",
                "help": "force serial execution regardless of --threads"
            },
        ),
        (
            ('--output-dir',),
            {
                "dest": "output_dir",
                "help": "directory holding one artifact directory per run (default: runs)"
            },
        ),
        (
            ('--ident',),
            {
                "help": "name of the artifact directory of this run (default: a generated uuid)"
            },
        ),
        (
            ('--debug',),
            {
                "action": "store_true",
                "help": "enable crosslab debug output logging (default=False)"
            },
        ),
        (
            ('--logfile',),
            {
                "help": "log output messages to a file (default=None)"
            },
        ),
    ),
    "detach_args": (
        (
            ('--detach',),
            {
                "action": "store_true",
                "help": "run in the background as a daemon; the pid file and daemon.log "
                        "live in the artifact directory"
            },
        ),
    ),
    "gen-terrain": (
        (
            ('--category',),
            {
                "required": True,
                "choices": [c.value for c in Category],
                "help": "terrain category of the tile"
            },
        ),
        (
            ('--level',),
            {
                "required": True,
                "type": int,
                "help": "difficulty level, 0 to 9"
            },
        ),
        (
            ('--out',),
            {
                "required": True,
                "help": "heightfield file to write"
            },
        ),
    ),
    "train-oracle": (
        (
            ('--iters',),
            {
                "type": int,
                "help": "PPO iterations (overrides ppo.iterations)"
            },
        ),
    ),
    "train-pas": (
        (
            ('--oracle',),
            {
                "help": "oracle checkpoint to start from (overrides pas.oracle_checkpoint)"
            },
        ),
        (
            ('--schedule',),
            {
                "help": "annealing schedule: exp:<base>, cosine, linear or none (overrides pas.schedule)"
            },
        ),
        (
            ('--iters',),
            {
                "type": int,
                "help": "second stage iterations (overrides pas.iterations)"
            },
        ),
    ),
    "train-baseline": (
        (
            ('--kind',),
            {
                "choices": BASELINE_KINDS,
                "help": "comparison policy to train (overrides pas.baseline)"
            },
        ),
        (
            ('--oracle',),
            {
                "help": "oracle checkpoint, required by il and rma"
            },
        ),
        (
            ('--iters',),
            {
                "type": int,
                "help": "iterations: ppo.iterations for blind and concurrent, pas.iterations for il and rma"
            },
        ),
    ),
    "train-terrain-estimator": (
        (
            ('--policy',),
            {
                "help": "deploy policy checkpoint whose rollouts feed the classifier"
            },
        ),
    ),
    "eval": (
        (
            ('--ckpt',),
            {
                "help": "policy checkpoint to evaluate (overrides eval.checkpoint)"
            },
        ),
        (
            ('--episodes',),
            {
                "type": int,
                "help": "episodes to run (overrides eval.episodes)"
            },
        ),
        (
            ('--golden',),
            {
                "help": "committed CSV to compare the table with; a mismatch exits 3"
            },
        ),
    ),
    "ablate": (
        (
            ('--oracle',),
            {
                "help": "oracle checkpoint every schedule starts from"
            },
        ),
        (
            ('--schedules',),
            {
                "help": "comma separated schedules (default: exp:0.9998,exp:0.9995,none,cosine,linear)"
            },
        ),
        (
            ('--iters',),
            {
                "type": int,
                "help": "second stage iterations per schedule (overrides pas.iterations)"
            },
        ),
        (
            ('--golden',),
            {
                "help": "committed CSV to compare the table with; a mismatch exits 3"
            },
        ),
    ),
    "navigate": (
        (
            ('--scenario',),
            {
                "action": "append",
                "dest": "scenarios",
                "help": "scenario file; repeat for several (default: every terrain and route direction)"
            },
        ),
        (
            ('--trials',),
            {
                "type": int,
                "help": "seeded trials per scenario (overrides eval.trials)"
            },
        ),
        (
            ('--noise',),
            {
                "type": float,
                "help": "localization drift of the noisy runs, 0 disables them (overrides eval.noisy_localization)"
            },
        ),
        (
            ('--controller',),
            {
                "choices": ('kinematic', 'policy'),
                "help": "locomotion stand-in or a trained policy in the simulator (overrides nav.controller)"
            },
        ),
        (
            ('--policy',),
            {
                "help": "policy checkpoint for --controller policy"
            },
        ),
        (
            ('--terrain-ckpt',),
            {
                "dest": "terrain_ckpt",
                "help": "terrain estimator checkpoint ending the climbing skill (default: ground truth)"
            },
        ),
        (
            ('--planner-command',),
            {
                "dest": "planner_command",
                "help": "command of a remote planner speaking the line protocol (default: rule-based planner)"
            },
        ),
        (
            ('--golden',),
            {
                "help": "committed CSV to compare the table with; a mismatch exits 3"
            },
        ),
    ),
    "serve-planner": (),
}

COMMAND_HELP = {
    'gen-terrain': "generate one terrain tile as a heightfield file",
    'train-oracle': "train the stage one oracle policy",
    'train-pas': "train the deploy policy with probability annealing selection",
    'train-baseline': "train a comparison policy (blind, concurrent, il, rma)",
    'train-terrain-estimator': "train the plane versus terrain classifier",
    'eval': "success rate and tracking ratios of a checkpoint",
    'ablate': "annealing schedule ablation table",
    'navigate': "end-to-end navigation benchmark",
    'serve-planner': "answer planner queries on stdin/stdout with the rule-based planner",
}


class CrossLabArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        # If no sub command was provided, print common usage then exit
        if 'required: command' in message.lower():
            print_common_usage()

        super().error(message)


def print_common_usage():
    print(textwrap.dedent("""
        These are common crosslab commands:

            train and evaluate locomotion policies:

                crosslab train-oracle -c lab.yml --iters 300
                crosslab train-pas -c lab.yml --oracle runs/oracle/checkpoint.bin --schedule exp:0.9998
                crosslab eval -c lab.yml --ckpt runs/pas/checkpoint.bin

            terrain and navigation:

                crosslab gen-terrain --category stairs_up --level 9 --seed 1 --out tile.hf
                crosslab navigate --trials 20

        `crosslab --help` list of optional command line arguments
    """))


def add_args_to_parser(parser, args):
    """
    Traverse a tuple of argments to add to a parser

    :param argparse.ArgumentParser parser: Instance of a parser, subparser, or argument group

    :param tuple args: Tuple of tuples, format ((arg1, arg2), {'kwarg1':'val1'},)

    :returns: None
    """
    for arg in args:
        parser.add_argument(*arg[0], **arg[1])


def build_parser() -> CrossLabArgumentParser:
    parser = CrossLabArgumentParser(
        prog='crosslab',
        description="Use 'crosslab' (with no arguments) to see basic usage"
    )
    add_args_to_parser(parser, DEFAULT_CLI_ARGS['generic_args'])
    subparser = parser.add_subparsers(
        help="Command to invoke",
        dest='command',
        description="COMMAND [ARGS]"
    )
    subparser.required = True
    for command, help_text in COMMAND_HELP.items():
        command_parser = subparser.add_parser(command, help=help_text)
        add_args_to_parser(command_parser, DEFAULT_CLI_ARGS[command])
        add_args_to_parser(command_parser, DEFAULT_CLI_ARGS['common_args'])
        if command in DETACHABLE:
            add_args_to_parser(command_parser, DEFAULT_CLI_ARGS['detach_args'])
    return parser


def _iteration_overrides(vargs: dict) -> dict:
    iters = vargs.get('iters')
    command = vargs['command']
    if command == 'train-oracle' or (command == 'train-baseline' and vargs.get('kind') in (None, 'blind', 'concurrent')):
        return {'ppo.iterations': iters}
    return {'pas.iterations': iters}


def config_from_args(vargs: dict):
    '''
    Load the configuration file and apply the command line overrides
    '''
    config = load_config(vargs.get('config'))
    overrides = {key: vargs.get(key) for key in ('seed', 'threads', 'reference_mode', 'output_dir', 'ident')}
    overrides.update(_iteration_overrides(vargs))
    if vargs['command'] == 'navigate':
        overrides.update({
            'eval.noisy_localization': vargs.get('noise'),
            'nav.controller': vargs.get('controller'),
            'nav.policy_checkpoint': vargs.get('policy'),
            'nav.terrain_checkpoint': vargs.get('terrain_ckpt'),
            'nav.planner_command': vargs.get('planner_command'),
        })
    return config.override(**overrides)


def run_command(vargs: dict, config) -> int:
    '''
    Dispatch one parsed command to the Python interface

    :return: the exit status.
    '''
    command = vargs['command']
    if command == 'gen-terrain':
        fn = interface.gen_terrain(vargs['category'], vargs['level'], config.seed, vargs['out'], config)
        output.display(fn)
        return 0
    if command == 'serve-planner':
        return interface.serve_planner(config)

    options = {'ignore_logging': True}
    if command == 'train-oracle':
        runner = interface.train_oracle(config, **options)
    elif command == 'train-pas':
        runner = interface.train_pas(vargs.get('oracle'), vargs.get('schedule'), config, **options)
    elif command == 'train-baseline':
        runner = interface.train_baseline(vargs.get('kind'), config, vargs.get('oracle'), **options)
    elif command == 'train-terrain-estimator':
        runner = interface.train_terrain_estimator(vargs.get('policy'), config, **options)
    elif command == 'eval':
        runner = interface.evaluate(vargs.get('ckpt'), config, episodes=vargs.get('episodes'),
                                    golden=vargs.get('golden'), **options)
    elif command == 'ablate':
        schedules = vargs['schedules'].split(',') if vargs.get('schedules') else interface.ABLATION_SCHEDULES
        runner = interface.ablate(vargs.get('oracle'), schedules, config, golden=vargs.get('golden'), **options)
    else:
        runner = interface.navigate(config, vargs.get('scenarios'), vargs.get('trials'),
                                    golden=vargs.get('golden'), **options)

    if runner.exception is not None:
        sys.stderr.write(f"ERROR: {runner.exception}\n")
    elif runner.output is not None and command in ('eval', 'ablate', 'navigate'):
        output.display(runner.output.result.to_csv().rstrip('\n'))
    output.display(f"{command} {runner.status}: artifacts in {runner.artifact_dir}")
    return runner.rc


def main(sys_args=None):
    """Main entry point for the crosslab executable

    :param list sys_args: List of arguments to be parsed by the parser

    :returns: the exit status
    :rtype: int
    """
    parser = build_parser()
    args = parser.parse_args(sys_args)
    vargs = vars(args)

    output.configure()

    # enable or disable debug mode
    output.set_debug('enable' if vargs.get('debug') else 'disable')

    # set the output logfile
    if vargs.get('logfile'):
        output.set_logfile(vargs.get('logfile'))

    output.debug('starting debug logging')

    try:
        config = config_from_args(vargs)
    except CrossLabException as exc:
        sys.stderr.write(f"ERROR: {exc}\n")
        return 1

    context = threading.Lock()
    stderr_path = None
    if vargs.get('detach'):
        if config.ident_option is None:
            config = config.override(ident=str(uuid4()))
        config.prepare()
        output.display(f"detaching; artifacts in {config.artifact_dir}")
        stderr_path = os.path.join(config.artifact_dir, 'daemon.log')
        if not os.path.exists(stderr_path):
            os.close(os.open(stderr_path, os.O_CREAT, stat.S_IRUSR | stat.S_IWUSR))
        pidfile = os.path.join(config.artifact_dir, 'pid')
        context = daemon.DaemonContext(pidfile=TimeoutPIDLockFile(pidfile))

    with context:
        try:
            return run_command(vargs, config)
        except USAGE_ERRORS as exc:
            sys.stderr.write(f"ERROR: {exc}\n")
            return 1
        except CrossLabException as exc:
            output.debug(traceback.format_exc())
            if stderr_path:
                with open(stderr_path, 'w+') as ep:
                    ep.write(traceback.format_exc())
            sys.stderr.write(f"ERROR: {exc}\n")
            return 2


if __name__ == '__main__':
    sys.exit(main())

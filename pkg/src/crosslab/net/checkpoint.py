'''
Binary checkpoint format

Layout, all little-endian::

    8 bytes   magic b'XLABCKPT'
    4 bytes   uint32 header length N
    N bytes   UTF-8 JSON header
    ...       float64 tensor data, concatenated in header order

The header holds ``format_version``, ``stage``, ``seed``, ``specs`` (one
network spec per network), ``spec_hash`` (sha256 of the canonical specs
JSON), ``meta`` and ``tensors``: a list of ``{name, shape, offset, nbytes}``
with offsets relative to the end of the header.  Tensor names are
``<network>/<parameter>``.
'''
from __future__ import annotations

import json
import os
import struct

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from packaging.version import InvalidVersion, Version

from crosslab import defaults
from crosslab.exceptions import CheckpointCorrupt, CheckpointIncompatible, CheckpointNotFound
from crosslab.net.layers import Network, NetworkSpec, spec_hash
from crosslab.utils import dump_artifact

MAGIC = b'XLABCKPT'
STAGES = ('oracle', 'deploy', 'baseline', 'terrain_estimator')
_DTYPE = np.dtype('<f8')


@dataclass
class Checkpoint:
    stage: str
    seed: int
    networks: dict[str, Network]
    meta: dict[str, Any] = field(default_factory=dict)
    format_version: str = defaults.CHECKPOINT_FORMAT_VERSION

    @property
    def specs(self) -> dict[str, NetworkSpec]:
        return {name: net.spec for name, net in self.networks.items()}

    @property
    def spec_hash(self) -> str:
        return spec_hash(self.specs)


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    if ckpt.stage not in STAGES:
        raise CheckpointIncompatible(f"unknown stage tag {ckpt.stage!r}")
    tensors = []
    chunks = []
    offset = 0
    for net_name in sorted(ckpt.networks):
        for param_name, value in ckpt.networks[net_name].params.items():
            data = np.ascontiguousarray(value, dtype=_DTYPE).tobytes()
            tensors.append({'name': f"{net_name}/{param_name}", 'shape': list(value.shape),
                            'offset': offset, 'nbytes': len(data)})
            chunks.append(data)
            offset += len(data)
    header = {
        'format_version': ckpt.format_version,
        'stage': ckpt.stage,
        'seed': int(ckpt.seed),
        'specs': {name: ckpt.networks[name].spec.to_dict() for name in sorted(ckpt.networks)},
        'spec_hash': ckpt.spec_hash,
        'meta': ckpt.meta,
        'tensors': tensors,
    }
    blob = json.dumps(header, sort_keys=True).encode('utf-8')
    return MAGIC + struct.pack('<I', len(blob)) + blob + b''.join(chunks)


def decode_checkpoint(data: bytes, source: str = '<bytes>') -> Checkpoint:
    prefix = len(MAGIC) + 4
    if len(data) < prefix or data[:len(MAGIC)] != MAGIC:
        raise CheckpointCorrupt(f"{source} is not a crosslab checkpoint")
    (length,) = struct.unpack('<I', data[len(MAGIC):prefix])
    if len(data) < prefix + length:
        raise CheckpointCorrupt(f"{source} is truncated inside its header")
    try:
        header = json.loads(data[prefix:prefix + length].decode('utf-8'))
        version = Version(header['format_version'])
        specs = {name: NetworkSpec.from_dict(s) for name, s in header['specs'].items()}
    except (ValueError, KeyError, TypeError, InvalidVersion) as exc:
        raise CheckpointCorrupt(f"{source} has an unreadable header: {exc}") from exc

    if version.major != Version(defaults.CHECKPOINT_FORMAT_VERSION).major:
        raise CheckpointIncompatible(
            f"{source} has format version {version}, this build reads {defaults.CHECKPOINT_FORMAT_VERSION}")
    if spec_hash(specs) != header.get('spec_hash'):
        raise CheckpointIncompatible(f"{source} spec hash does not match its network specs")

    body = data[prefix + length:]
    params: dict[str, dict[str, np.ndarray]] = {name: {} for name in specs}
    try:
        for entry in header['tensors']:
            start, nbytes = int(entry['offset']), int(entry['nbytes'])
            if start < 0 or nbytes < 0 or start + nbytes > len(body):
                raise CheckpointCorrupt(f"{source} is truncated in tensor {entry['name']}")
            net_name, param_name = entry['name'].split('/', 1)
            array = np.frombuffer(body[start:start + nbytes], dtype=_DTYPE).reshape(entry['shape'])
            params[net_name][param_name] = array.astype(np.float64)
        networks = {name: Network(spec, params[name]) for name, spec in specs.items()}
        return Checkpoint(stage=header['stage'], seed=header['seed'], networks=networks,
                          meta=header.get('meta', {}), format_version=str(version))
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise CheckpointCorrupt(f"{source} has unreadable tensors: {exc!r}") from exc


def save_checkpoint(stage: str, networks: Mapping[str, Network], path: str, filename: str = defaults.CHECKPOINT_FILE,
                    seed: int = 0, manifest: Mapping[str, Any] | None = None) -> str:
    '''
    Write a checkpoint and return its path

    :param stage: one of ``oracle``, ``deploy``, ``baseline``, ``terrain_estimator``.
    :param manifest: run metadata stored in the header ``meta`` field.
    '''
    ckpt = Checkpoint(stage=stage, seed=seed, networks=dict(networks), meta=dict(manifest or {}))
    return dump_artifact(encode_checkpoint(ckpt), path, filename)


def load_checkpoint(path: str, stage: str | None = None,
                    specs: Mapping[str, NetworkSpec] | None = None) -> Checkpoint:
    '''
    Read a checkpoint, optionally requiring a stage tag and network specs

    :raises: CheckpointNotFound, CheckpointCorrupt or CheckpointIncompatible.
    '''
    if not path or not os.path.isfile(path):
        raise CheckpointNotFound(f"checkpoint not found: {path}")
    with open(path, 'rb') as f:
        ckpt = decode_checkpoint(f.read(), path)
    if stage is not None and ckpt.stage != stage:
        raise CheckpointIncompatible(f"{path} holds a {ckpt.stage} checkpoint, a {stage} checkpoint is required")
    if specs is not None:
        for name, spec in specs.items():
            if name not in ckpt.networks:
                raise CheckpointIncompatible(f"{path} has no network {name!r}")
            if ckpt.networks[name].spec != spec:
                raise CheckpointIncompatible(f"{path} network {name!r} does not match the configured spec")
    return ckpt

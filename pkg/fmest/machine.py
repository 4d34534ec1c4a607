"""Deterministic finite-state estimation machines.

A machine with ``S`` states reads a stream of bits and moves between states
according to two transition tables; every state carries an estimate of the
Bernoulli parameter. States are numbered ``1..S`` on every public
interface and in machine files.
"""

import json
import logging
import numbers

import networkx as nx
import numpy as np
from scipy import sparse
from sklearn.utils import Bunch

from .exceptions import DomainError, MachineParseError, StructuralError
from .utils import check_theta

__all__ = [
    'Machine', 'TransitionMatrix', 'deserialize', 'load_machine', 'serialize'
]

FORMAT_VERSION = 1

logger         = logging.getLogger(__name__)


def _walk(table, state, bits):
    """Follow ``bits`` from the 0-based ``state`` through a doubled table.

    ``table[2 * s + b]`` holds twice the 0-based successor of ``s`` on bit
    ``b``; the returned array holds the 0-based states visited.
    """

    s2     = 2 * state
    out    = []
    append = out.append

    for b in bits:
        s2 = table[s2 + b]

        append(s2)

    return np.asarray(out, dtype=np.int64) // 2


def _check_bits(bits):
    """Return ``bits`` as a list of ints, raising DomainError on non-bits."""

    bits = np.asarray(bits).ravel()

    if bits.size and not np.all((bits == 0) | (bits == 1)):
        raise DomainError('bits must only contain 0 and 1')

    return bits.astype(np.int64).tolist()


class TransitionMatrix:
    """Sparse row-stochastic matrix of the chain induced by Bern(theta) input.

    Parameters
    ----------
    matrix : sparse matrix of shape (S, S)
        Transition probabilities; row ``i`` is the law of the next state
        given the current state ``i + 1``.

    theta : float
        Bernoulli parameter the matrix was built for.
    """

    def __init__(self, matrix, theta):
        self.matrix = sparse.csr_matrix(matrix)
        self.theta  = theta

        self.matrix.sum_duplicates()
        self.matrix.eliminate_zeros()

    @property
    def dimension(self):
        """int: Number of states.
        """

        return self.matrix.shape[0]

    def row_sums(self):
        """Return the sum of every row."""

        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def toarray(self):
        """Return the matrix as a dense array."""

        return self.matrix.toarray()

    def log_rows(self):
        """Return the log transition probabilities as one dict per row.

        Keys are 0-based column indices.
        """

        m       = self.matrix
        logdata = np.log(m.data).tolist()
        indices = m.indices.tolist()
        indptr  = m.indptr.tolist()

        return [
            dict(zip(indices[indptr[i]:indptr[i + 1]],
                     logdata[indptr[i]:indptr[i + 1]]))
            for i in range(self.dimension)
        ]


class Machine:
    """Deterministic S-state estimation machine.

    Parameters
    ----------
    next0 : array-like of shape (S,)
        Successor of every state on input bit 0 (1-based).

    next1 : array-like of shape (S,)
        Successor of every state on input bit 1 (1-based).

    estimate : array-like of shape (S,)
        Estimate attached to every state.

    initial : int, default 1
        Initial state (1-based).

    class_map : array-like of shape (S,), default None
        Class label of every state, for machines composed of classes.

    metadata : dict, default None
        Free-form construction metadata stored alongside the machine.

    Examples
    --------
    >>> from fmest.machine import Machine
    >>> m = Machine(next0=[1, 1], next1=[2, 2], estimate=[0., 1.])
    >>> m.step(1, 1)
    2
    >>> m.run([1, 0, 1]).tolist()
    [2, 1, 2]
    """

    def __init__(
        self, next0, next1, estimate, initial=1, class_map=None,
        metadata=None
    ):
        self._next0    = self._freeze(next0, np.int64, 'next0')
        S,             = self._next0.shape
        self._next1    = self._freeze(next1, np.int64, 'next1', S)
        self._estimate = self._freeze(estimate, float, 'estimate', S)

        if class_map is None:
            self._class_map = None
        else:
            self._class_map = self._freeze(class_map, np.int64, 'class_map', S)

        if not isinstance(initial, numbers.Integral):
            raise StructuralError(f'initial must be an int but was {initial}')

        self._initial  = int(initial)
        self._metadata = dict(metadata or {})
        self._errors   = self._structural_errors()

        table          = np.empty(2 * S, dtype=np.int64)
        table[0::2]    = 2 * (self._next0 - 1)
        table[1::2]    = 2 * (self._next1 - 1)
        self._table    = table.tolist()

    @staticmethod
    def _freeze(values, dtype, name, size=None):
        values = np.array(values, dtype=dtype).ravel()

        if values.size == 0:
            raise StructuralError(f'{name} must not be empty')

        if size is not None and values.size != size:
            raise StructuralError(
                f'{name} is expected to have {size} entries '
                f'but had {values.size} entries'
            )

        values.setflags(write=False)

        return values

    def _structural_errors(self):
        S      = self.num_states
        errors = []

        for name, table in [('next0', self._next0), ('next1', self._next1)]:
            bad = np.flatnonzero((table < 1) | (table > S))

            if bad.size:
                errors.append(
                    f'{name}[{bad[0] + 1}] = {table[bad[0]]} is not in '
                    f'[1, {S}]'
                )

        bad = np.flatnonzero(
            ~((self._estimate >= 0.) & (self._estimate <= 1.))
        )

        if bad.size:
            errors.append(
                f'estimate[{bad[0] + 1}] = {self._estimate[bad[0]]} is not '
                f'in [0, 1]'
            )

        if not 1 <= self._initial <= S:
            errors.append(f'initial = {self._initial} is not in [1, {S}]')

        return errors

    def _check_structure(self):
        """Raise StructuralError if the tables are not valid."""

        if self._errors:
            raise StructuralError(self._errors[0])

    def _check_state(self, state):
        if isinstance(state, bool) or not isinstance(state, numbers.Integral) \
                or not 1 <= state <= self.num_states:
            raise StructuralError(
                f'state must be in [1, {self.num_states}] but was {state}'
            )

    @property
    def num_states(self):
        """int: Number of states.
        """

        return self._next0.shape[0]

    @property
    def next0(self):
        """array-like of shape (S,): Successors on bit 0.
        """

        return self._next0

    @property
    def next1(self):
        """array-like of shape (S,): Successors on bit 1.
        """

        return self._next1

    @property
    def estimate(self):
        """array-like of shape (S,): Estimate of every state.
        """

        return self._estimate

    @property
    def initial(self):
        """int: Initial state.
        """

        return self._initial

    @property
    def class_map(self):
        """array-like of shape (S,): Class label of every state, or None.
        """

        return self._class_map

    @property
    def metadata(self):
        """dict: Construction metadata.
        """

        return dict(self._metadata)

    def step(self, state, bit):
        """Return the successor of ``state`` on input ``bit``."""

        self._check_structure()
        self._check_state(state)

        if bit == 1:
            return int(self._next1[state - 1])

        if bit == 0:
            return int(self._next0[state - 1])

        raise DomainError(f'bit must be 0 or 1 but was {bit}')

    def run(self, bits, start=None):
        """Feed ``bits`` to the machine.

        Parameters
        ----------
        bits : array-like of shape (n_bits,)
            Input stream.

        start : int, default None
            State to start from. If None, start from the initial state.

        Returns
        -------
        trajectory : array-like of shape (n_bits,)
            State reached after each bit (1-based).
        """

        self._check_structure()

        if start is None:
            start = self._initial

        self._check_state(start)

        return _walk(self._table, start - 1, _check_bits(bits)) + 1

    def validate(self):
        """Check the tables and the connectivity of the transition graph.

        Index-range violations are reported, not raised.

        Returns
        -------
        diagnostics : Bunch
            ``structural_ok``, ``strongly_connected``, ``aperiodic``
            (None unless strongly connected), ``reachable_from_initial``
            and the list of ``errors``.
        """

        graph     = self.graph()
        S         = self.num_states

        if 1 <= self._initial <= S:
            reachable = len(nx.descendants(graph, self._initial)) + 1 == S
        else:
            reachable = False

        connected = nx.is_strongly_connected(graph)

        return Bunch(
            structural_ok          = not self._errors,
            strongly_connected     = connected,
            aperiodic              = nx.is_aperiodic(graph) if connected
            else None,
            reachable_from_initial = reachable,
            errors                 = list(self._errors)
        )

    def graph(self):
        """Return the transition graph, skipping out-of-range edges."""

        S     = self.num_states
        graph = nx.DiGraph()

        graph.add_nodes_from(range(1, S + 1))

        for table in [self._next0, self._next1]:
            graph.add_edges_from(
                (i, j) for i, j in enumerate(table.tolist(), start=1)
                if 1 <= j <= S
            )

        return graph

    def transition_matrix(self, theta):
        """Build the transition matrix of the chain driven by Bern(theta).

        Parameters
        ----------
        theta : float
            Bernoulli parameter in the open interval (0, 1).

        Returns
        -------
        tm : TransitionMatrix
            Row ``i`` carries ``1 - theta`` on ``next0[i]`` and ``theta`` on
            ``next1[i]``, merged when both coincide.
        """

        check_theta(theta)

        self._check_structure()

        S      = self.num_states
        rows   = np.repeat(np.arange(S), 2)
        cols   = np.column_stack([self._next0 - 1, self._next1 - 1]).ravel()
        data   = np.tile([1. - theta, theta], S)
        matrix = sparse.coo_matrix((data, (rows, cols)), shape=(S, S))

        return TransitionMatrix(matrix, theta)

    def save(self, filename):
        """Write the machine document to ``filename``."""

        with open(filename, 'wb') as f:
            f.write(serialize(self))

        logger.info('wrote %d-state machine to %s', self.num_states, filename)


def serialize(machine):
    """Encode ``machine`` as a versioned JSON document.

    Returns
    -------
    data : bytes
        UTF-8 encoded document.
    """

    doc = {
        'version':    FORMAT_VERSION,
        'num_states': machine.num_states,
        'initial':    machine.initial,
        'next0':      machine.next0.tolist(),
        'next1':      machine.next1.tolist(),
        'estimate':   machine.estimate.tolist()
    }

    if machine.class_map is not None:
        doc['class_map'] = machine.class_map.tolist()

    if machine.metadata:
        doc['metadata'] = machine.metadata

    return json.dumps(doc, indent=1).encode('utf-8')


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _parse_array(doc, field, size, check):
    values = doc.get(field)

    if not isinstance(values, list):
        raise MachineParseError(field, 'missing or not an array')

    if len(values) != size:
        raise MachineParseError(
            field, f'expected {size} entries but found {len(values)}'
        )

    for i, value in enumerate(values, start=1):
        if not check(value):
            raise MachineParseError(
                field, f'entry {i} has invalid value {value!r}'
            )

    return values


def deserialize(data):
    """Decode a machine document produced by :func:`serialize`.

    Raises
    ------
    MachineParseError
        If the document is malformed; the error names the offending field.
    """

    if isinstance(data, bytes):
        data = data.decode('utf-8')

    try:
        doc = json.loads(data)
    except ValueError as e:
        raise MachineParseError('document', f'not valid JSON ({e})')

    if not isinstance(doc, dict):
        raise MachineParseError('document', 'top level must be an object')

    if doc.get('version') != FORMAT_VERSION:
        raise MachineParseError(
            'version', f'unsupported version {doc.get("version")!r}'
        )

    S = doc.get('num_states')

    if not _is_int(S) or S < 1:
        raise MachineParseError('num_states', f'invalid value {S!r}')

    def is_index(value):
        return _is_int(value) and 1 <= value <= S

    def is_estimate(value):
        return isinstance(value, (int, float)) \
            and not isinstance(value, bool) and 0. <= value <= 1.

    next0    = _parse_array(doc, 'next0', S, is_index)
    next1    = _parse_array(doc, 'next1', S, is_index)
    estimate = _parse_array(doc, 'estimate', S, is_estimate)
    initial  = doc.get('initial')

    if not is_index(initial):
        raise MachineParseError('initial', f'invalid value {initial!r}')

    class_map = None

    if 'class_map' in doc:
        class_map = _parse_array(
            doc, 'class_map', S, lambda value: _is_int(value) and value >= 1
        )

    metadata = doc.get('metadata', {})

    if not isinstance(metadata, dict):
        raise MachineParseError('metadata', 'must be an object')

    return Machine(
        next0     = next0,
        next1     = next1,
        estimate  = estimate,
        initial   = initial,
        class_map = class_map,
        metadata  = metadata
    )


def load_machine(filename):
    """Read a machine document from ``filename``."""

    with open(filename, 'rb') as f:
        machine = deserialize(f.read())

    logger.debug(
        'loaded %d-state machine from %s', machine.num_states, filename
    )

    return machine

"""Sensor node query processing.

A node peels its head layer, repads the head, and, when its layer carries
keys, opens the body, runs the task and seals the body for the next target.
Decoys touch only the head. Both draw the forwarding multiplier r first and
repad with the same number of random bytes, so with a fixed random source the
two roles produce the same delay and the same head length.
"""

from ipaddress import IPv4Address

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from onion_wsn.core.envelope import KeyPair
from onion_wsn.core.exceptions import (
    AuthenticationError,
    MalformedLayerError,
    SensorFaultError,
    TaskValidationError,
)
from onion_wsn.core.logger import logger
from onion_wsn.core.models.query import Query
from onion_wsn.core.onion import (
    DEFAULT_TASK_MAX,
    open_body,
    peel,
    reencrypt_body,
    repad_head,
)
from onion_wsn.core.settings import Settings
from onion_wsn.core.vm.interpreter import DEFAULT_STEP_BUDGET, SensorInterface, execute


class NodeTiming(BaseModel):
    """
    Timing parameters shared by every sensor node of a deployment.
    """

    delta_t_steps: int = Field(default=DEFAULT_STEP_BUDGET, ge=1)
    """
    Task step budget (delta_t).
    """

    delta_q_ms: float = Field(default=50.0, gt=0.0)
    """
    Fixed forwarding hold (delta_q).
    """

    r_max: float = Field(default=4.0, ge=0.0)
    """
    Upper bound of the uniform forwarding multiplier r.
    """

    delays_enabled: bool = True
    vm_step_cost_us: float = Field(default=1.0, ge=0.0)
    decrypt_cost_us_per_byte: float = Field(default=2.0, ge=0.0)

    model_config = ConfigDict(frozen=True)

    @classmethod
    def from_settings(cls, settings: Settings) -> "NodeTiming":
        return cls(
            delta_t_steps=settings.DELTA_T_STEPS,
            delta_q_ms=settings.DELTA_Q_MS,
            r_max=settings.R_MAX,
            delays_enabled=settings.DELAYS_ENABLED,
            vm_step_cost_us=settings.VM_STEP_COST_US,
            decrypt_cost_us_per_byte=settings.DECRYPT_COST_US_PER_BYTE,
        )

    def processing_s(self, decrypted_bytes: int, steps: int) -> float:
        """Simulated compute time for decrypting and running a task."""
        return (decrypted_bytes * self.decrypt_cost_us_per_byte + steps * self.vm_step_cost_us) / 1e6


class NodeState(BaseModel):
    """
    Everything one sensor node needs to process queries.
    """

    address: IPv4Address
    keypair: KeyPair
    sensors: SensorInterface = Field(default_factory=SensorInterface)
    timing: NodeTiming = Field(default_factory=NodeTiming)
    task_max: int = DEFAULT_TASK_MAX
    """
    L_t the node expects inside every body.
    """

    model_config = ConfigDict(frozen=True)


class ForwardAction(BaseModel):
    """
    What a node sends on after processing a query.
    """

    next_hop: IPv4Address
    query: Query
    delay: float = Field(ge=0.0)
    """
    Seconds between receipt and forwarding.
    """

    model_config = ConfigDict(frozen=True)


def on_receive(state: NodeState, query: Query, rng: np.random.Generator) -> ForwardAction | None:
    """Process an incoming query.

    Returns:
        The forwarding action, or None when the query is dropped because the
        outer layer is not addressed to this node or is malformed.
    """
    r = rng.uniform(0.0, state.timing.r_max) if state.timing.r_max > 0 else 0.0
    head_size = len(query.head)
    try:
        peeled = peel(query.head, state.keypair.private_key)
    except AuthenticationError:
        logger.warning("Dropping misrouted query at %s", state.address)
        return None
    except MalformedLayerError as e:
        logger.warning("Dropping query at %s: %s", state.address, e)
        return None
    if peeled.is_terminal or peeled.next_hop is None:
        logger.warning("Dropping query at %s: terminal layer reached a sensor node", state.address)
        return None

    head = repad_head(peeled.inner, rng, head_size)
    body = query.body
    steps = 0
    decrypted = head_size
    if peeled.keys is not None:
        try:
            parts = open_body(query.body, peeled.keys.e_a, state.task_max)
        except (AuthenticationError, MalformedLayerError) as e:
            logger.warning("Dropping query at %s: body did not open (%s)", state.address, e)
            return None
        carrier = parts.carrier
        try:
            result = execute(parts.task, parts.carrier, state.sensors, state.timing.delta_t_steps)
            steps = result.steps
            if not result.interrupted:
                carrier = result.carrier
        except SensorFaultError as e:
            logger.warning("Sensor fault at %s, carrier left unchanged: %s", state.address, e)
        except TaskValidationError as e:
            logger.warning("Invalid task at %s, carrier left unchanged: %s", state.address, e)
        body = reencrypt_body(parts, carrier, peeled.keys.e_b, rng)
        decrypted += len(query.body)

    if state.timing.delays_enabled:
        delay = state.timing.delta_q_ms * (1.0 + r) / 1000.0
    else:
        delay = state.timing.processing_s(decrypted, steps)
    logger.debug("%s forwards to %s after %.6f s", state.address, peeled.next_hop, delay)
    return ForwardAction(
        next_hop=peeled.next_hop,
        query=Query(head=head, body=body),
        delay=delay,
    )

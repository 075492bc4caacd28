import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class HopOutcome(BaseModel):
    """
    Result of pushing one message across one radio link.
    """

    elapsed: float
    """
    Seconds from first send to delivery, or to giving up.
    """

    attempts: int
    delivered: bool

    model_config = ConfigDict(frozen=True)


class LinkModel(BaseModel):
    """
    Abstract radio link: serialisation delay plus fixed latency, with optional
    loss that grows toward the edge of radio range and exponential-backoff
    retransmission.
    """

    data_rate_bps: float = Field(default=12e6, gt=0.0)
    latency_s: float = Field(default=0.0005, ge=0.0)
    relay_s: float = Field(default=0.0, ge=0.0)
    """
    Forwarding time at a relay that only routes the query.
    """

    loss: float = Field(default=0.0, ge=0.0, le=1.0)
    """
    Base loss probability of every transmission.
    """

    edge_loss: float = Field(default=0.0, ge=0.0, le=1.0)
    """
    Extra loss at the full communication range.
    """

    edge_exponent: float = Field(default=4.0, gt=0.0)
    rto_s: float = Field(default=0.2, gt=0.0)
    """
    Initial retransmission timeout; doubles after each loss.
    """

    model_config = ConfigDict(frozen=True)

    def transmission_time(self, size: int) -> float:
        return size * 8 / self.data_rate_bps + self.latency_s

    def loss_probability(self, distance: float, comm_range: float) -> float:
        reach = min(distance / comm_range, 1.0) if comm_range > 0 else 1.0
        return min(self.loss + self.edge_loss * reach**self.edge_exponent, 1.0)

    def hop(
        self,
        size: int,
        distance: float,
        comm_range: float,
        rng: np.random.Generator,
        timeout_s: float,
    ) -> HopOutcome:
        """Send `size` bytes over one link, retransmitting lost copies.

        Gives up once the hop has taken longer than `timeout_s`.
        """
        p = self.loss_probability(distance, comm_range)
        elapsed = 0.0
        rto = self.rto_s
        attempts = 0
        while True:
            attempts += 1
            if p == 0.0 or rng.random() >= p:
                elapsed += self.transmission_time(size)
                return HopOutcome(elapsed=elapsed, attempts=attempts, delivered=elapsed <= timeout_s)
            elapsed += rto
            rto *= 2
            if elapsed > timeout_s:
                return HopOutcome(elapsed=timeout_s, attempts=attempts, delivered=False)

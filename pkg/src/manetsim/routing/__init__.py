from manetsim.routing.aodv import Aodv
from manetsim.routing.base import DataPacket, RouteEntry, RoutingAgent
from manetsim.routing.dsr import Dsr
from manetsim.routing.olsr import Olsr

PROTOCOLS = {"aodv": Aodv, "dsr": Dsr, "olsr": Olsr}

__all__ = ["Aodv", "DataPacket", "Dsr", "Olsr", "PROTOCOLS", "RouteEntry", "RoutingAgent"]

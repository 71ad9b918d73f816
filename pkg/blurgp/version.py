# Copyright (c) 2022 Amigos Development Inc.
#
# MIT License - See LICENSE file accompanying this package.
#

"""Version string for this package"""

# The following line is automatically updated with "semantic-release version"
__version__ =  "0.1.0"

__all__ = [ '__version__' ]

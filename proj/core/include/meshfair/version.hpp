#ifndef MESHFAIR_VERSION_HPP
#define MESHFAIR_VERSION_HPP

#define MESHFAIR_VERSION "0.1.0"

#endif

#ifndef UTIL_H
#define UTIL_H
int log_msg(const char *m);
#endif
